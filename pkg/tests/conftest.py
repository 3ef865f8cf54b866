"""Shared fixtures: the heavy critical-point scans and small oracle grids.

Session scope keeps the expensive solves to one run each; every consumer
sees identical records, and wall times are carried alongside the payloads
so runtime budgets can be asserted where the work is mandated.
"""

from __future__ import annotations

import time

import pytest

from dicke_qfi.ground import (
    boson_gram,
    solve_ground,
    solve_ground_fock_oracle,
    spin_moments,
)
from dicke_qfi.model import ModelParams
from dicke_qfi.scaling import scan_sizes_at_critical

ACCEPTANCE_SIZES = (64, 128, 256, 512, 1024, 2048)
SCAN_WORKERS = 4


@pytest.fixture(scope="session")
def critical_scans():
    """Size scans at the critical coupling for both detunings, with timing."""
    records = {}
    elapsed = {}
    for d in (1.0, 0.5):
        template = ModelParams(omega=1.0, delta=d, lam=0.5, n_atoms=2)
        t0 = time.perf_counter()
        records[d] = scan_sizes_at_critical(
            template, ACCEPTANCE_SIZES, max_workers=SCAN_WORKERS
        )
        elapsed[d] = time.perf_counter() - t0
    return records, elapsed


@pytest.fixture(scope="session")
def oracle_grid():
    """Coherent-basis and Fock-basis solutions for every N <= 8 grid point."""
    rows = []
    t0 = time.perf_counter()
    for n in range(2, 9):
        for ratio in (0.2, 0.8, 1.0, 1.5, 2.0):
            params = ModelParams(
                omega=1.0, delta=1.0, lam=0.5 * ratio, n_atoms=n
            )
            state = solve_ground(params)
            moments = spin_moments(state, boson_gram(state))
            fock, fock_moments = solve_ground_fock_oracle(params, n_max=80)
            rows.append((params, state, moments, fock, fock_moments))
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="session")
def n256_point():
    """The N = 256 resonant point at lambda = 1, with its moments."""
    params = ModelParams(omega=1.0, delta=1.0, lam=1.0, n_atoms=256)
    t0 = time.perf_counter()
    state = solve_ground(params)
    moments = spin_moments(state, boson_gram(state))
    return (params, moments), time.perf_counter() - t0
