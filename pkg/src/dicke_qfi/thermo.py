"""Thermodynamic-limit closed forms for the ground state and its QFI.

Scaled variables: alpha is the field amplitude <a>/sqrt(N), beta the atomic
displacement, with beta^2 the excited-population fraction.  The module
collects the mean-field solution, an independent numerical minimizer used as
its oracle, the limiting two-atom state and QFI, the harmonic excitation
energies eps_-+, the scaled QFI of the N-atom subsystem, and the square-root
expansion of that QFI at the critical coupling.

All functions are pure closed forms (plus one bounded 1-d search) and cheap;
nothing here touches the finite-N solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams, critical_coupling
from .qfi import TwoAtomXState, qfi_closed_form

__all__ = [
    "MeanFieldSolution",
    "ExcitationEnergies",
    "energy_density",
    "stationarity_residuals",
    "mean_field_solution",
    "minimize_energy_numeric",
    "two_atom_limit_state",
    "qfi_two_atom_limit",
    "excitation_energies",
    "qfi_atomic_limit",
    "critical_expansion_amplitude",
    "qfi_atomic_critical_expansion",
]

# Fractional validity window of the critical expansion, documented for
# callers; comparisons against the full limit formula use points inside it.
EXPANSION_WINDOW = 0.05

@dataclass(frozen=True)
class MeanFieldSolution:
    """Closed-form mean-field ground state in scaled variables.

    mu is 1 in the normal phase and (lambda_c/lambda)^2 above the critical
    coupling; beta2 = max{0, (1 - mu)/2}; alpha follows from the field
    stationarity condition; energy_density is E_G/N.
    """

    mu: float
    beta2: float
    alpha: float
    energy_density: float
    phase: str

    @property
    def beta(self) -> float:
        return math.sqrt(self.beta2)


@dataclass(frozen=True)
class ExcitationEnergies:
    """Harmonic excitation branches above the mean-field ground state."""

    eps_plus: float
    eps_minus: float


def energy_density(params: ModelParams, alpha: float, beta: float) -> float:
    """Variational ground-state energy per atom at scaled amplitudes."""
    return (
        params.omega * alpha * alpha
        - 4.0 * params.lam * alpha * beta * math.sqrt(1.0 - beta * beta)
        + params.delta * (beta * beta - 0.5)
    )


def stationarity_residuals(
    params: ModelParams, alpha: float, beta: float
) -> tuple[float, float]:
    """Both first-order conditions of the energy density at (alpha, beta).

    Returns the field equation omega alpha - 2 lambda beta sqrt(1-beta^2)
    and the atomic equation 2 lambda alpha (1-2 beta^2)/sqrt(1-beta^2)
    - delta beta; both vanish at a stationary point.
    """
    s = math.sqrt(1.0 - beta * beta)
    r_field = params.omega * alpha - 2.0 * params.lam * beta * s
    r_atom = (
        2.0 * params.lam * alpha * s
        - 2.0 * params.lam * alpha * beta * beta / s
        - params.delta * beta
    )
    return r_field, r_atom


def mean_field_solution(params: ModelParams) -> MeanFieldSolution:
    """Closed-form minimizer of the energy density, positive-beta branch."""
    lam_c = critical_coupling(params)
    if params.lam <= lam_c:
        return MeanFieldSolution(
            mu=1.0,
            beta2=0.0,
            alpha=0.0,
            energy_density=-0.5 * params.delta,
            phase="normal",
        )
    mu = (lam_c / params.lam) ** 2
    beta2 = 0.5 * (1.0 - mu)
    beta = math.sqrt(beta2)
    alpha = 2.0 * params.lam / params.omega * beta * math.sqrt(1.0 - beta2)
    return MeanFieldSolution(
        mu=mu,
        beta2=beta2,
        alpha=alpha,
        energy_density=energy_density(params, alpha, beta),
        phase="superradiant",
    )


def minimize_energy_numeric(
    params: ModelParams, tol: float = 1e-12, max_iter: int = 200
) -> tuple[float, float]:
    """Independent numerical minimization of the energy density.

    The field amplitude is minimized exactly at each beta (the energy is
    quadratic in alpha), leaving a one-dimensional profile in beta whose
    slope follows from term-by-term differentiation.  A sign change of the
    slope is isolated by bisection; when the slope is nonnegative at both
    bracket edges the profile rises away from beta = 0 and the boundary is
    the minimizer.  Bisection on the slope, rather than comparison of
    profile values, is required near the critical coupling: there the
    profile is quartic-flat and varies by less than the floating-point
    resolution of its own values over a ~1e-4 wide neighborhood of the
    minimizer.  The energy density is even under (alpha, beta) ->
    (-alpha, -beta), so the search runs on beta >= 0 and reports that
    branch.
    """

    def inner_alpha(beta: float) -> float:
        return (
            2.0 * params.lam / params.omega * beta * math.sqrt(1.0 - beta * beta)
        )

    def slope(beta: float) -> float:
        # d/d beta of energy_density(params, inner_alpha(beta), beta)
        return 2.0 * beta * (
            params.delta
            - 4.0 * params.lam**2 / params.omega * (1.0 - 2.0 * beta * beta)
        )

    lo, hi = 1e-9, 1.0 - 1e-9
    if slope(lo) >= 0.0:
        return 0.0, 0.0
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    else:
        raise RuntimeError(
            f"slope bisection did not shrink below {tol} in {max_iter} steps"
        )
    beta = 0.5 * (lo + hi)
    return inner_alpha(beta), beta


def two_atom_limit_state(beta2: float) -> TwoAtomXState:
    """Limiting reduced two-atom state at mean-field amplitude beta^2.

    Populations and coherences are (beta^4, (1-beta^2)^2) on the aligned
    pair states and beta^2 (1-beta^2) on everything else; the trace is one
    by the binomial identity.
    """
    if not 0.0 <= beta2 <= 1.0:
        raise ValueError(f"beta2 must lie in [0, 1], got {beta2!r}")
    s = 1.0 - beta2
    cross = beta2 * s
    return TwoAtomXState(
        v_plus=beta2 * beta2,
        v_minus=s * s,
        w=cross,
        y=cross,
        u=cross,
        x_plus=0.0,
        x_minus=0.0,
    )


def qfi_two_atom_limit(params: ModelParams) -> float:
    """Limit of the two-atom QFI: 8 b(1-b)/(b^2 + (1-b)^2) with b = beta^2.

    Zero throughout the normal phase, monotone in the coupling above it,
    and bounded by 4.
    """
    beta2 = mean_field_solution(params).beta2
    s = 1.0 - beta2
    return 8.0 * beta2 * s / (beta2 * beta2 + s * s)


def excitation_energies(params: ModelParams) -> ExcitationEnergies:
    """Both harmonic branches; eps_minus closes exactly at the critical point."""
    mu = mean_field_solution(params).mu
    ratio2 = (params.delta / mu) ** 2
    omega2 = params.omega**2
    half = 0.5 * (omega2 + ratio2)
    spread = math.sqrt(
        (omega2 - ratio2) ** 2
        + 16.0 * params.lam**2 * params.omega * params.delta * mu
    )
    eps_plus2 = half + 0.5 * spread
    eps_minus2 = half - 0.5 * spread
    if eps_minus2 < 0.0:
        if eps_minus2 < -1e-12 * half:
            raise ValueError(
                f"negative squared excitation energy {eps_minus2!r}"
            )
        eps_minus2 = 0.0
    return ExcitationEnergies(
        eps_plus=math.sqrt(eps_plus2), eps_minus=math.sqrt(eps_minus2)
    )


def qfi_atomic_limit(params: ModelParams) -> float:
    """Scaled QFI of the N-atom subsystem in the thermodynamic limit.

    Continuous through the critical coupling, where it attains its maximum
    sqrt(omega^2 + delta^2)/delta; tends to 1 as the coupling vanishes and
    to 0 deep in the superradiant phase.
    """
    mu = mean_field_solution(params).mu
    eps = excitation_energies(params)
    total = eps.eps_plus + eps.eps_minus
    ratio2 = (params.delta / mu) ** 2
    return 2.0 * mu * params.delta / (total + (ratio2 - params.omega**2) / total)


def critical_expansion_amplitude(params: ModelParams) -> float:
    """Amplitude of the square-root term in the critical expansion."""
    lam_c = critical_coupling(params)
    return math.sqrt(
        32.0
        * params.omega**2
        * lam_c**3
        / (params.delta**2 * (16.0 * lam_c**4 + params.omega**4))
    )


def qfi_atomic_critical_expansion(params: ModelParams, lam: float) -> float:
    """Two-term expansion of the scaled atomic QFI about the critical coupling.

    peak - amplitude * sqrt|lam_c - lam| with the peak value
    sqrt(omega^2 + delta^2)/delta.  The coupling enters only through `lam`;
    params.lam is ignored.  The amplitude matches the normal-phase side of
    the full formula (the superradiant side carries a different amplitude),
    and the expansion is documented as valid for
    |lam - lam_c| / lam_c <= EXPANSION_WINDOW.
    """
    lam_c = critical_coupling(params)
    peak = math.sqrt(params.omega**2 + params.delta**2) / params.delta
    return peak - critical_expansion_amplitude(params) * math.sqrt(
        abs(lam_c - lam)
    )
