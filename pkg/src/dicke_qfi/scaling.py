"""Coupling sweeps, critical size scans, power-law fits, and the collapse map.

One SweepRecord per (N, lambda) point, produced by the full pipeline
solve_ground -> reduced matrices -> both QFI values.  Records are plain
frozen rows; sweeps are deterministic and may fan out over processes, with
results aggregated in grid order regardless of completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .ground import SolverOptions, boson_gram, solve_ground, spin_moments
from .model import ModelParams, TruncationSpec, critical_coupling
from .qfi import (
    DEFAULT_GENERATOR_AXIS,
    build_two_atom_state,
    qfi_atomic,
    qfi_closed_form,
)

__all__ = [
    "SweepRecord",
    "ScalingFit",
    "MomentExponents",
    "CollapsePoint",
    "CollapseResult",
    "compute_sweep_record",
    "sweep_lambda",
    "scan_sizes_at_critical",
    "fit_power_law",
    "moment_exponent_suite",
    "collapse_transform",
]

# Exponent of the scaling variable N (lambda - lambda_c)^{3/2} and the
# compensating power applied to the two-atom QFI in the collapse map.
COLLAPSE_GRID_POWER = 1.5
COLLAPSE_QFI_POWER = 2.0 / 3.0


@dataclass(frozen=True)
class SweepRecord:
    """One fully processed (N, lambda) point of the pipeline."""

    n_atoms: int
    lam: float
    f_q_two_atom: float
    f_a_scaled: float
    jz2_scaled: float
    jx2_scaled: float
    jy2_scaled: float
    gap: float
    n_tr_used: int
    degenerate: bool


@dataclass(frozen=True)
class ScalingFit:
    """Ordinary least-squares power-law fit on (ln N, ln y)."""

    exponent: float
    intercept: float
    stderr_exponent: float
    r_squared: float
    n_points: int
    size_range: tuple[int, int]


@dataclass(frozen=True)
class MomentExponents:
    """Power-law fits of the centered second moments at the critical point."""

    jz2_centered: ScalingFit
    jx2: ScalingFit
    jy2: ScalingFit


@dataclass(frozen=True)
class CollapsePoint:
    n_atoms: int
    lam: float
    x: float
    y: float


@dataclass(frozen=True)
class CollapseResult:
    points: tuple[CollapsePoint, ...]
    skipped: int


def compute_sweep_record(
    params: ModelParams,
    trunc: TruncationSpec | None = None,
    options: SolverOptions | None = None,
    axis: str = DEFAULT_GENERATOR_AXIS,
) -> SweepRecord:
    """Full pipeline for one parameter point.

    The two-atom QFI comes from the closed form on the reduced pair state;
    the N-atom QFI from the spectral route on the reduced atomic matrix,
    scaled by N.
    """
    state = solve_ground(params, trunc, options)
    gram = boson_gram(state)
    moments = spin_moments(state, gram)
    n = params.n_atoms
    f_q = qfi_closed_form(build_two_atom_state(moments, n)).value
    f_a = qfi_atomic(gram, axis, n).value / n
    n_sq = float(n) * float(n)
    record = SweepRecord(
        n_atoms=n,
        lam=params.lam,
        f_q_two_atom=f_q,
        f_a_scaled=f_a,
        jz2_scaled=moments.jz2 / n_sq,
        jx2_scaled=moments.jx2 / n_sq,
        jy2_scaled=moments.jy2 / n_sq,
        gap=state.gap,
        n_tr_used=state.n_tr_used,
        degenerate=state.degenerate_flag,
    )
    for name in ("f_q_two_atom", "f_a_scaled", "jz2_scaled", "jx2_scaled",
                 "jy2_scaled", "gap"):
        if not math.isfinite(getattr(record, name)):
            raise RuntimeError(
                f"non-finite {name} at N={n}, lambda={params.lam}"
            )
    return record


def _record_task(
    args: tuple[ModelParams, TruncationSpec | None, SolverOptions | None, str],
) -> SweepRecord:
    return compute_sweep_record(*args)


def _compute_many(
    param_list: Sequence[ModelParams],
    trunc: TruncationSpec | None,
    options: SolverOptions | None,
    axis: str,
    max_workers: int,
) -> list[SweepRecord]:
    tasks = [(p, trunc, options, axis) for p in param_list]
    labels = [f"N={p.n_atoms}, lambda={p.lam}" for p in param_list]
    if max_workers <= 1 or len(tasks) <= 1:
        records = []
        for label, task in zip(labels, tasks):
            try:
                records.append(_record_task(task))
            except Exception as exc:
                raise RuntimeError(f"sweep failed at {label}: {exc}") from exc
        return records
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_record_task, task) for task in tasks]
        records = []
        for label, future in zip(labels, futures):
            try:
                records.append(future.result())
            except Exception as exc:
                raise RuntimeError(f"sweep failed at {label}: {exc}") from exc
        return records


def sweep_lambda(
    template: ModelParams,
    lambdas: Sequence[float],
    n_atoms: int | None = None,
    trunc: TruncationSpec | None = None,
    options: SolverOptions | None = None,
    axis: str = DEFAULT_GENERATOR_AXIS,
    max_workers: int = 1,
) -> list[SweepRecord]:
    """One record per coupling on a sorted grid, at fixed system size."""
    grid = [float(x) for x in lambdas]
    if grid != sorted(grid):
        raise ValueError("lambda grid must be sorted ascending")
    n = template.n_atoms if n_atoms is None else n_atoms
    points = [replace(template, lam=lam, n_atoms=n) for lam in grid]
    return _compute_many(points, trunc, options, axis, max_workers)


def scan_sizes_at_critical(
    template: ModelParams,
    sizes: Sequence[int],
    trunc: TruncationSpec | None = None,
    options: SolverOptions | None = None,
    axis: str = DEFAULT_GENERATOR_AXIS,
    max_workers: int = 1,
) -> list[SweepRecord]:
    """One record per system size, all at the critical coupling."""
    lam_c = critical_coupling(template)
    points = [
        replace(template, lam=lam_c, n_atoms=int(n)) for n in sizes
    ]
    return _compute_many(points, trunc, options, axis, max_workers)


def fit_power_law(points: Iterable[tuple[float, float]]) -> ScalingFit:
    """Unweighted OLS fit of y = c N^nu on logarithmic axes.

    Standard error of the exponent comes from the residual variance; the
    fit refuses nonpositive ordinates and fewer than four points.
    """
    data = [(float(n), float(y)) for n, y in points]
    if len(data) < 4:
        raise ValueError(f"power-law fit needs >= 4 points, got {len(data)}")
    for n, y in data:
        if y <= 0.0:
            raise ValueError(f"nonpositive ordinate y={y!r} at N={n!r}")
    log_n = np.log([n for n, _ in data])
    log_y = np.log([y for _, y in data])
    count = len(data)
    design = np.column_stack([log_n, np.ones(count)])
    coeffs, _, _, _ = np.linalg.lstsq(design, log_y, rcond=None)
    exponent, intercept = float(coeffs[0]), float(coeffs[1])
    residuals = log_y - design @ coeffs
    ss_res = float(residuals @ residuals)
    centered = log_y - log_y.mean()
    ss_tot = float(centered @ centered)
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    sxx = float(((log_n - log_n.mean()) ** 2).sum())
    stderr = math.sqrt(ss_res / (count - 2) / sxx) if count > 2 else math.inf
    sizes = [int(round(n)) for n, _ in data]
    return ScalingFit(
        exponent=exponent,
        intercept=intercept,
        stderr_exponent=stderr,
        r_squared=min(max(r_squared, 0.0), 1.0),
        n_points=count,
        size_range=(min(sizes), max(sizes)),
    )


def moment_exponent_suite(records: Sequence[SweepRecord]) -> MomentExponents:
    """Fits of the critical second moments against system size.

    jz2 is centered on its limiting value 1/4 (the raw moment tends to a
    constant; only the deviation scales), jx2 and jy2 are fitted raw.
    """
    jz2 = fit_power_law(
        (r.n_atoms, 0.25 - r.jz2_scaled) for r in records
    )
    jx2 = fit_power_law((r.n_atoms, r.jx2_scaled) for r in records)
    jy2 = fit_power_law((r.n_atoms, r.jy2_scaled) for r in records)
    return MomentExponents(jz2_centered=jz2, jx2=jx2, jy2=jy2)


def collapse_transform(
    records: Sequence[SweepRecord], template: ModelParams
) -> CollapseResult:
    """Scaling-variable map for records above the critical coupling.

    Emits x = N (lambda - lambda_c)^{3/2} against y = F_Q N^{2/3}; points at
    or below the critical coupling carry no scaling variable and are skipped,
    with the count reported.  No functional form is fitted.
    """
    lam_c = critical_coupling(template)
    points: list[CollapsePoint] = []
    skipped = 0
    for rec in records:
        if rec.lam <= lam_c:
            skipped += 1
            continue
        x = rec.n_atoms * (rec.lam - lam_c) ** COLLAPSE_GRID_POWER
        y = rec.f_q_two_atom * rec.n_atoms**COLLAPSE_QFI_POWER
        points.append(
            CollapsePoint(n_atoms=rec.n_atoms, lam=rec.lam, x=x, y=y)
        )
    return CollapseResult(points=tuple(points), skipped=skipped)
