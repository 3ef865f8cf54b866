"""Closed-form infinite-size results: mean field, limit QFI, expansion."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dicke_qfi.model import ModelParams, critical_coupling
from dicke_qfi.qfi import qfi_closed_form
from dicke_qfi.thermo import (
    critical_expansion_amplitude,
    energy_density,
    excitation_energies,
    mean_field_solution,
    minimize_energy_numeric,
    qfi_atomic_critical_expansion,
    qfi_atomic_limit,
    qfi_two_atom_limit,
    stationarity_residuals,
    two_atom_limit_state,
)


def _params(lam, omega=1.0, delta=1.0):
    return ModelParams(omega=omega, delta=delta, lam=lam, n_atoms=2)


def test_normal_phase_solution():
    for lam in (0.0, 0.2, 0.5):
        sol = mean_field_solution(_params(lam))
        assert sol.phase == "normal"
        assert sol.mu == 1.0 and sol.beta2 == 0.0 and sol.alpha == 0.0
        assert sol.energy_density == -0.5


def test_superradiant_anchor_values():
    sol = mean_field_solution(_params(1.0))
    assert sol.phase == "superradiant"
    assert sol.mu == pytest.approx(0.25, abs=1e-15)
    assert sol.beta2 == pytest.approx(0.375, abs=1e-15)
    assert sol.alpha == pytest.approx(math.sqrt(15.0) / 4.0, abs=1e-14)
    assert sol.energy_density == pytest.approx(-1.0625, abs=1e-12)


def test_closed_form_is_stationary():
    for lam in (0.55, 0.7, 1.0, 1.6, 2.0):
        sol = mean_field_solution(_params(lam))
        r_field, r_atom = stationarity_residuals(_params(lam), sol.alpha, sol.beta)
        assert abs(r_field) < 1e-12 and abs(r_atom) < 1e-12, lam


def test_numeric_minimizer_matches_closed_form():
    # the grid deliberately contains the critical coupling itself; for a
    # non-dyadic lambda_c one ulp of dust in the quadratic coefficient of
    # the profile can move the numeric minimizer off zero by ~sqrt(ulp),
    # so the order-parameter agreement is bounded by ~1e-8 there (and is
    # orders of magnitude tighter everywhere else)
    for omega, delta in ((1.0, 1.0), (1.0, 0.5)):
        lam_c = critical_coupling(_params(0.0, omega, delta))
        for lam in np.linspace(0.0, 4.0 * lam_c, 17):
            p = _params(float(lam), omega, delta)
            sol = mean_field_solution(p)
            alpha, beta = minimize_energy_numeric(p)
            assert alpha == pytest.approx(sol.alpha, abs=1e-8)
            assert beta**2 == pytest.approx(sol.beta2, abs=1e-8)
            assert energy_density(p, alpha, beta) == pytest.approx(
                sol.energy_density, abs=1e-12
            )


def test_numeric_minimizer_iteration_guard():
    with pytest.raises(RuntimeError, match="did not shrink"):
        minimize_energy_numeric(_params(1.0), tol=1e-15, max_iter=0)


def test_two_atom_limit_qfi_anchors():
    for lam in (0.0, 0.3, 0.5):
        assert qfi_two_atom_limit(_params(lam)) == 0.0
    assert qfi_two_atom_limit(_params(1.0)) == pytest.approx(60.0 / 17.0, abs=1e-12)
    assert abs(qfi_two_atom_limit(_params(20.0)) - 4.0) < 1e-3
    grid = [qfi_two_atom_limit(_params(lam)) for lam in np.linspace(0.5, 20.0, 40)]
    assert all(a < b for a, b in zip(grid, grid[1:]))
    assert all(v <= 4.0 for v in grid)


def test_limit_state_reproduces_limit_qfi():
    for lam in (0.1, 0.5, 0.55, 0.7, 1.0, 1.7, 4.0):
        p = _params(lam)
        state = two_atom_limit_state(mean_field_solution(p).beta2)
        assert np.trace(state.matrix()).real == pytest.approx(1.0, abs=1e-14)
        assert qfi_closed_form(state).value == pytest.approx(
            qfi_two_atom_limit(p), abs=1e-12
        )


def test_limit_state_domain():
    with pytest.raises(ValueError, match="beta2"):
        two_atom_limit_state(-0.1)
    with pytest.raises(ValueError, match="beta2"):
        two_atom_limit_state(1.2)


def test_excitation_branches_decoupled_and_critical():
    eps = excitation_energies(_params(0.0, omega=1.0, delta=0.5))
    assert eps.eps_minus == pytest.approx(0.5, abs=1e-14)
    assert eps.eps_plus == pytest.approx(1.0, abs=1e-14)
    for omega, delta in ((1.0, 1.0), (1.0, 0.5)):
        lam_c = critical_coupling(_params(0.0, omega, delta))
        eps = excitation_energies(_params(lam_c, omega, delta))
        assert eps.eps_minus == 0.0
        assert eps.eps_plus == pytest.approx(
            math.sqrt(omega**2 + delta**2), abs=1e-12
        )


def test_excitation_energies_known_digits():
    eps = excitation_energies(_params(1.0))
    root = math.sqrt(229.0)
    assert eps.eps_plus == pytest.approx(math.sqrt((17.0 + root) / 2.0), abs=1e-14)
    assert eps.eps_minus == pytest.approx(math.sqrt((17.0 - root) / 2.0), abs=1e-14)


def test_excitation_sum_and_product_identities():
    for omega, delta in ((1.0, 1.0), (1.0, 0.5)):
        p0 = _params(0.0, omega, delta)
        lam_c = critical_coupling(p0)
        for lam in np.linspace(0.0, 3.0 * lam_c, 13):
            p = _params(float(lam), omega, delta)
            mu = mean_field_solution(p).mu
            eps = excitation_energies(p)
            ratio2 = (delta / mu) ** 2
            assert eps.eps_plus**2 + eps.eps_minus**2 == pytest.approx(
                omega**2 + ratio2, rel=1e-12
            )
            assert eps.eps_plus**2 * eps.eps_minus**2 == pytest.approx(
                omega**2 * ratio2 - 4.0 * lam**2 * omega * delta * mu, abs=1e-9
            )


def test_atomic_limit_anchors():
    assert qfi_atomic_limit(_params(0.0)) == pytest.approx(1.0, abs=1e-15)
    assert qfi_atomic_limit(_params(0.0, delta=0.5)) == pytest.approx(1.0, abs=1e-15)
    assert qfi_atomic_limit(_params(0.5)) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    lam_c = critical_coupling(_params(0.0, delta=0.5))
    assert qfi_atomic_limit(_params(lam_c, delta=0.5)) == pytest.approx(
        math.sqrt(5.0), abs=1e-12
    )
    assert qfi_atomic_limit(_params(1.0)) == pytest.approx(
        0.06257907682620364, abs=1e-15
    )


def test_atomic_limit_peaks_at_criticality():
    peak = qfi_atomic_limit(_params(0.5))
    for lam in (0.5 - 1e-10, 0.5 + 1e-10):
        assert abs(qfi_atomic_limit(_params(lam)) - peak) < 1e-4
    for lam in np.linspace(0.01, 2.0, 50):
        if abs(lam - 0.5) > 1e-6:
            assert qfi_atomic_limit(_params(float(lam))) < peak


def test_expansion_amplitude_and_peak():
    assert critical_expansion_amplitude(_params(1.0)) == pytest.approx(
        math.sqrt(2.0), abs=1e-14
    )
    p = _params(0.5)
    assert qfi_atomic_critical_expansion(p, 0.5) == pytest.approx(
        math.sqrt(2.0), abs=1e-14
    )
    assert qfi_atomic_critical_expansion(p, 0.49) < math.sqrt(2.0)


def test_expansion_error_is_higher_order():
    # the defect of the two-term expansion must vanish faster than the
    # square-root distance it keeps
    p = _params(0.5)
    ratios = []
    for k in range(2, 6):
        lam = 0.5 - 10.0**-k
        gap = abs(qfi_atomic_limit(_params(lam)) - qfi_atomic_critical_expansion(p, lam))
        ratios.append(gap / math.sqrt(10.0**-k))
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 0.1 * ratios[0]
