"""Command-line surface: config parsing, dispatch, and bit-exact emission.

Five subcommands: `ground` (single point, JSON), `sweep` (coupling grid at
fixed size), `scaling` (size scan at the critical coupling plus power-law
fit block), `thermo` (closed-form curves, no solver), and `collapse`
(scaling-variable map).  Every file written is paired with a JSON manifest
carrying the tool version, the fully resolved configuration, the numeric
tolerances in force, and per-stage wall times.

Floats are printed with repr(), the shortest decimal that round-trips the
binary value (at most 17 significant digits), so identical runs produce
byte-identical CSV/JSON output.  Parallelism fans out only across (N,
lambda) tasks in separate processes; each solve is single-threaded and
records are sorted before emission, so the thread budget never changes the
output bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .ground import (
    DEGENERACY_GAP,
    PARITY_FAILURE,
    PARITY_TARGET,
    PSD_CLAMP,
    SolverError,
    SolverOptions,
    boson_gram,
    solve_ground,
    spin_moments,
)
from .model import ModelParams, TruncationSpec, critical_coupling
from .qfi import (
    DEFAULT_GENERATOR_AXIS,
    GENERATOR_AXES,
    build_two_atom_state,
    qfi_atomic,
    qfi_closed_form,
)
from .scaling import (
    collapse_transform,
    fit_power_law,
    moment_exponent_suite,
    scan_sizes_at_critical,
    sweep_lambda,
)
from .thermo import (
    mean_field_solution,
    qfi_atomic_critical_expansion,
    qfi_atomic_limit,
    qfi_two_atom_limit,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

THREADS_ENV = "DICKE_QFI_THREADS"

# Sizes above this need --big-n; the standard grids are calibrated for
# desk-scale runtime.
MAX_STANDARD_SIZE = 2048

CSV_HEADER = (
    "n_atoms,lambda,f_q_two_atom,f_a_scaled,jz2_scaled,jx2_scaled,"
    "jy2_scaled,gap,n_tr_used,degenerate"
)
COLLAPSE_HEADER = "n_atoms,lambda,x,y"
THERMO_HEADER = (
    "lambda,mu,beta2,alpha,energy_density,f_q_limit,f_a_limit,f_a_expansion"
)

DEFAULT_SIZES = (32, 64, 128, 256, 512, 1024, 2048)

AXIS_NOTE = (
    "generator axis defaults to 'x': selected empirically at N=256 where "
    "its scaled QFI tracks the infinite-size curve across the coupling "
    "range while y and z do not; see tests/test_qfi.py::"
    "test_default_axis_dominates"
)

TOLERANCES = {
    "tol_energy": TruncationSpec().tol_energy,
    "tol_obs": TruncationSpec().tol_obs,
    "arpack_tol": SolverOptions().arpack_tol,
    "residual_tol": SolverOptions().residual_tol,
    "degeneracy_gap": DEGENERACY_GAP,
    "parity_target": PARITY_TARGET,
    "parity_failure": PARITY_FAILURE,
    "psd_clamp": PSD_CLAMP,
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters for one CLI invocation."""

    command: str
    omega: float
    delta: float
    lam: float
    n_atoms: int
    lambdas: tuple[float, ...]
    sizes: tuple[int, ...]
    axis: str
    out: str | None
    threads: int
    big_n: bool
    n_tr: int
    n_tr_max: int

    def model_params(self, lam: float | None = None, n: int | None = None) -> ModelParams:
        return ModelParams(
            omega=self.omega,
            delta=self.delta,
            lam=self.lam if lam is None else lam,
            n_atoms=self.n_atoms if n is None else n,
        )

    def truncation(self) -> TruncationSpec:
        return TruncationSpec(n_tr=self.n_tr, n_tr_max=self.n_tr_max)


_COMMANDS = ("ground", "sweep", "scaling", "thermo", "collapse")

# Per-command defaults applied after merging flags over the config file.
_DEFAULTS = {
    "omega": 1.0,
    "d": None,
    "delta": None,
    "lam": 0.0,
    "n": 16,
    "lambdas": None,
    "lambda_min": 0.0,
    "lambda_max": 1.0,
    "steps": 101,
    "sizes": ",".join(str(s) for s in DEFAULT_SIZES),
    "axis": DEFAULT_GENERATOR_AXIS,
    "out": None,
    "threads": None,
    "big_n": False,
    "ntr": TruncationSpec().n_tr,
    "ntr_max": TruncationSpec().n_tr_max,
    "config": None,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicke-qfi",
        description=(
            "Ground states, quantum Fisher information, and critical "
            "scaling of the Dicke model."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--omega", type=float, help="field frequency (default 1.0)")
        group = p.add_mutually_exclusive_group()
        group.add_argument(
            "--delta", type=float, help="atomic splitting (default: omega)"
        )
        group.add_argument(
            "--d", type=float, help="detuning ratio delta/omega shorthand"
        )
        p.add_argument(
            "--axis",
            choices=GENERATOR_AXES,
            help="original-frame generator axis for the N-atom QFI "
            f"(default {DEFAULT_GENERATOR_AXIS!r}; see manifest note)",
        )
        p.add_argument("--ntr", type=int, help="initial boson truncation per sector")
        p.add_argument("--ntr-max", type=int, help="truncation ceiling")
        p.add_argument(
            "--threads",
            type=int,
            help=f"process fan-out across (N, lambda) tasks (default ${THREADS_ENV} or 1)",
        )
        p.add_argument(
            "--big-n",
            action="store_true",
            default=None,
            help=f"allow sizes above {MAX_STANDARD_SIZE}",
        )
        p.add_argument("--config", help="flat JSON config file; flags win")
        p.add_argument("--out", help="output file path")

    p_ground = sub.add_parser("ground", help="one ground-state point as JSON")
    common(p_ground)
    p_ground.add_argument("--lambda", dest="lam", type=float, help="coupling")
    p_ground.add_argument("--n", type=int, help="number of atoms")

    p_sweep = sub.add_parser("sweep", help="coupling sweep at fixed size (CSV)")
    common(p_sweep)
    p_sweep.add_argument("--n", type=int, help="number of atoms")
    p_sweep.add_argument("--lambdas", help="comma list of couplings")
    p_sweep.add_argument("--lambda-min", type=float, help="grid start (default 0)")
    p_sweep.add_argument("--lambda-max", type=float, help="grid end (default 1)")
    p_sweep.add_argument("--steps", type=int, help="grid points (default 101)")

    p_scaling = sub.add_parser(
        "scaling", help="size scan at the critical coupling with fit block"
    )
    common(p_scaling)
    p_scaling.add_argument("--sizes", help="comma list of system sizes")

    p_thermo = sub.add_parser(
        "thermo", help="closed-form infinite-size curves (no solver)"
    )
    common(p_thermo)
    p_thermo.add_argument("--lambdas", help="comma list of couplings")
    p_thermo.add_argument("--lambda-min", type=float, help="grid start (default 0)")
    p_thermo.add_argument("--lambda-max", type=float, help="grid end (default 1)")
    p_thermo.add_argument("--steps", type=int, help="grid points (default 101)")

    p_collapse = sub.add_parser(
        "collapse", help="scaling-variable map over sizes x couplings"
    )
    common(p_collapse)
    p_collapse.add_argument("--sizes", help="comma list of system sizes")
    p_collapse.add_argument("--lambdas", help="comma list of couplings")
    p_collapse.add_argument("--lambda-min", type=float, help="grid start (default 0)")
    p_collapse.add_argument("--lambda-max", type=float, help="grid end (default 1)")
    p_collapse.add_argument("--steps", type=int, help="grid points (default 101)")

    return parser


def _parse_float_list(text: str, key: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: not a comma list of numbers: {text!r}") from exc
    if not values:
        raise ConfigError(f"{key}: empty list")
    return values

def _parse_int_list(text: str, key: str) -> tuple[int, ...]:
    try:
        values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: not a comma list of integers: {text!r}") from exc
    if not values:
        raise ConfigError(f"{key}: empty list")
    return values


def _merge_config_file(args: argparse.Namespace) -> dict:
    """Flag values over file values over defaults, unknown file keys rejected."""
    merged = {k: v for k, v in vars(args).items() if k != "command"}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {args.config!r}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config: file must hold a flat JSON object")
        allowed = set(merged) | {"lambda"}
        for key, value in loaded.items():
            dest = "lam" if key == "lambda" else key.replace("-", "_")
            if dest not in merged or dest == "config":
                raise ConfigError(f"config: unknown key {key!r}")
            if isinstance(value, (dict, list)):
                raise ConfigError(f"config: key {key!r} must be scalar")
            if merged[dest] is None or merged[dest] is False:
                merged[dest] = value
        del allowed
    for key, default in _DEFAULTS.items():
        if merged.get(key) is None:
            merged[key] = default
    return merged


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """argv (plus optional --config file) to a validated RunConfig."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    merged = _merge_config_file(args)
    command = args.command

    omega = float(merged["omega"])
    if merged.get("delta") is not None and merged.get("d") is not None:
        raise ConfigError("delta: give either delta or the ratio d, not both")
    if merged.get("delta") is not None:
        delta = float(merged["delta"])
    elif merged.get("d") is not None:
        delta = float(merged["d"]) * omega
    else:
        delta = omega
    if omega <= 0.0:
        raise ConfigError(f"omega: must be positive, got {omega!r}")
    if delta <= 0.0:
        raise ConfigError(f"delta: must be positive, got {delta!r}")

    lam = float(merged["lam"])
    if lam < 0.0:
        raise ConfigError(f"lambda: must be nonnegative, got {lam!r}")

    n_atoms = int(merged["n"])
    if command in ("ground", "sweep") and n_atoms < 2:
        raise ConfigError(f"n_atoms: need at least 2 atoms, got {n_atoms!r}")

    if merged.get("lambdas") is not None:
        lambdas = _parse_float_list(str(merged["lambdas"]), "lambdas")
    else:
        lo = float(merged.get("lambda_min", 0.0))
        hi = float(merged.get("lambda_max", 1.0))
        steps = int(merged.get("steps", 101))
        if steps < 1:
            raise ConfigError(f"steps: must be >= 1, got {steps!r}")
        if hi < lo:
            raise ConfigError(f"lambda_max: {hi!r} below lambda_min {lo!r}")
        lambdas = tuple(float(x) for x in np.linspace(lo, hi, steps))
    if any(x < 0.0 for x in lambdas):
        raise ConfigError("lambdas: couplings must be nonnegative")

    sizes = _parse_int_list(str(merged["sizes"]), "sizes")
    if any(s < 2 for s in sizes):
        raise ConfigError(f"sizes: each size needs at least 2 atoms, got {min(sizes)}")

    big_n = bool(merged.get("big_n") or False)
    checked = list(sizes)
    if command in ("ground", "sweep"):
        checked.append(n_atoms)
    oversized = [s for s in checked if s > MAX_STANDARD_SIZE]
    if oversized and not big_n:
        raise ConfigError(
            f"sizes: {max(oversized)} exceeds {MAX_STANDARD_SIZE}; pass --big-n"
        )

    axis = str(merged.get("axis") or DEFAULT_GENERATOR_AXIS)
    if axis not in GENERATOR_AXES:
        raise ConfigError(f"axis: must be one of {GENERATOR_AXES}, got {axis!r}")

    threads = merged.get("threads")
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env is not None:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"threads: bad {THREADS_ENV} value {env!r}"
                ) from exc
        else:
            threads = 1
    threads = int(threads)
    if threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {threads!r}")

    n_tr = int(merged.get("ntr", _DEFAULTS["ntr"]))
    n_tr_max = int(merged.get("ntr_max", _DEFAULTS["ntr_max"]))
    try:
        TruncationSpec(n_tr=n_tr, n_tr_max=n_tr_max)
    except ValueError as exc:
        raise ConfigError(f"ntr: {exc}") from exc

    try:
        ModelParams(omega=omega, delta=delta, lam=lam, n_atoms=n_atoms)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    out = merged.get("out")
    if command in ("sweep", "scaling", "thermo", "collapse") and not out:
        raise ConfigError(f"out: {command} writes a CSV; pass --out PATH")

    return RunConfig(
        command=command,
        omega=omega,
        delta=delta,
        lam=lam,
        n_atoms=n_atoms,
        lambdas=lambdas,
        sizes=sizes,
        axis=axis,
        out=out,
        threads=threads,
        big_n=big_n,
        n_tr=n_tr,
        n_tr_max=n_tr_max,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(records: Iterable, path: str) -> None:
    """Sweep records to CSV with the fixed header and round-trip floats."""
    rows = sorted(records, key=lambda r: (r.n_atoms, r.lam))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    str(r.n_atoms),
                    _fmt(r.lam),
                    _fmt(r.f_q_two_atom),
                    _fmt(r.f_a_scaled),
                    _fmt(r.jz2_scaled),
                    _fmt(r.jx2_scaled),
                    _fmt(r.jy2_scaled),
                    _fmt(r.gap),
                    str(r.n_tr_used),
                    "1" if r.degenerate else "0",
                )
            )
        )
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_manifest(
    path: str, config: RunConfig, wall_times: dict[str, float], extras: dict | None = None
) -> None:
    payload = {
        "tool": "dicke-qfi",
        "version": __version__,
        "config": asdict(config),
        "tolerances": TOLERANCES,
        "generator_axis_note": AXIS_NOTE,
        "wall_times_s": {k: round(v, 3) for k, v in wall_times.items()},
    }
    if extras:
        payload["extras"] = extras
    _write_text(path + ".manifest.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _run_ground(config: RunConfig) -> int:
    t0 = time.perf_counter()
    params = config.model_params()
    state = solve_ground(params, config.truncation())
    gram = boson_gram(state)
    moments = spin_moments(state, gram)
    n = params.n_atoms
    f_q = qfi_closed_form(build_two_atom_state(moments, n)).value
    f_a = qfi_atomic(gram, config.axis, n).value / n
    compute_s = time.perf_counter() - t0
    result = {
        "omega": params.omega,
        "delta": params.delta,
        "lambda": params.lam,
        "n_atoms": n,
        "critical_coupling": critical_coupling(params),
        "energy": state.energy,
        "energy_per_atom": state.energy / n,
        "gap": state.gap,
        "n_tr_used": state.n_tr_used,
        "degenerate": state.degenerate_flag,
        "parity_resolved": state.parity_resolved,
        "parity_ok": state.parity_ok,
        "axis": config.axis,
        "f_q_two_atom": f_q,
        "f_a_scaled": f_a,
        "moments": {
            "jz": moments.jz,
            "jz2": moments.jz2,
            "jx2": moments.jx2,
            "jy2": moments.jy2,
            "jp_real": moments.jp.real,
            "jp_imag": moments.jp.imag,
            "jp2_real": moments.jp2.real,
            "jp2_imag": moments.jp2.imag,
        },
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    t1 = time.perf_counter()
    if config.out:
        _write_text(config.out, text)
        _write_manifest(
            config.out, config, {"compute": compute_s, "emit": time.perf_counter() - t1}
        )
    sys.stdout.write(text)
    return EXIT_OK


def _run_sweep(config: RunConfig) -> int:
    t0 = time.perf_counter()
    template = config.model_params(lam=config.lambdas[0] or 1.0)
    records = sweep_lambda(
        template,
        sorted(config.lambdas),
        n_atoms=config.n_atoms,
        trunc=config.truncation(),
        axis=config.axis,
        max_workers=config.threads,
    )
    compute_s = time.perf_counter() - t0
    t1 = time.perf_counter()
    emit_csv(records, config.out)
    _write_manifest(
        config.out, config, {"compute": compute_s, "emit": time.perf_counter() - t1}
    )
    return EXIT_OK


def _run_scaling(config: RunConfig) -> int:
    t0 = time.perf_counter()
    template = config.model_params(lam=1.0)
    records = scan_sizes_at_critical(
        template,
        config.sizes,
        trunc=config.truncation(),
        axis=config.axis,
        max_workers=config.threads,
    )
    lam_c = critical_coupling(template)
    limit = qfi_atomic_limit(config.model_params(lam=lam_c))
    fits = {
        "f_q_two_atom": fit_power_law(
            [(r.n_atoms, r.f_q_two_atom) for r in records]
        ),
        "f_a_deficit": fit_power_law(
            [(r.n_atoms, limit - r.f_a_scaled) for r in records]
        ),
    }
    moment_fits = moment_exponent_suite(records)
    fits["jz2_centered"] = moment_fits.jz2_centered
    fits["jx2"] = moment_fits.jx2
    fits["jy2"] = moment_fits.jy2
    compute_s = time.perf_counter() - t0
    t1 = time.perf_counter()
    emit_csv(records, config.out)
    _write_manifest(
        config.out,
        config,
        {"compute": compute_s, "emit": time.perf_counter() - t1},
        extras={
            "critical_coupling": lam_c,
            "f_a_limit": limit,
            "fits": {k: asdict(v) for k, v in fits.items()},
        },
    )
    for name, fit in fits.items():
        sys.stdout.write(
            f"fit {name}: exponent={fit.exponent:.4f} "
            f"stderr={fit.stderr_exponent:.4f} r2={fit.r_squared:.6f} "
            f"sizes={fit.size_range[0]}..{fit.size_range[1]}\n"
        )
    return EXIT_OK


def _run_thermo(config: RunConfig) -> int:
    t0 = time.perf_counter()
    lines = [THERMO_HEADER]
    for lam in sorted(config.lambdas):
        params = config.model_params(lam=lam)
        mf = mean_field_solution(params)
        lines.append(
            ",".join(
                (
                    _fmt(lam),
                    _fmt(mf.mu),
                    _fmt(mf.beta2),
                    _fmt(mf.alpha),
                    _fmt(mf.energy_density),
                    _fmt(qfi_two_atom_limit(params)),
                    _fmt(qfi_atomic_limit(params)),
                    _fmt(qfi_atomic_critical_expansion(params, lam)),
                )
            )
        )
    compute_s = time.perf_counter() - t0
    t1 = time.perf_counter()
    _write_text(config.out, "\n".join(lines) + "\n")
    _write_manifest(
        config.out, config, {"compute": compute_s, "emit": time.perf_counter() - t1}
    )
    return EXIT_OK


def _run_collapse(config: RunConfig) -> int:
    t0 = time.perf_counter()
    template = config.model_params(lam=1.0)
    records = []
    for size in sorted(config.sizes):
        records.extend(
            sweep_lambda(
                template,
                sorted(config.lambdas),
                n_atoms=size,
                trunc=config.truncation(),
                axis=config.axis,
                max_workers=config.threads,
            )
        )
    result = collapse_transform(records, template)
    compute_s = time.perf_counter() - t0
    t1 = time.perf_counter()
    lines = [COLLAPSE_HEADER]
    for point in sorted(result.points, key=lambda p: (p.n_atoms, p.lam)):
        lines.append(
            ",".join(
                (str(point.n_atoms), _fmt(point.lam), _fmt(point.x), _fmt(point.y))
            )
        )
    _write_text(config.out, "\n".join(lines) + "\n")
    _write_manifest(
        config.out,
        config,
        {"compute": compute_s, "emit": time.perf_counter() - t1},
        extras={"skipped_at_or_below_critical": result.skipped},
    )
    sys.stdout.write(
        f"collapse: {len(result.points)} points, {result.skipped} skipped at "
        "or below the critical coupling\n"
    )
    return EXIT_OK


def run_command(config: RunConfig) -> int:
    runner = {
        "ground": _run_ground,
        "sweep": _run_sweep,
        "scaling": _run_scaling,
        "thermo": _run_thermo,
        "collapse": _run_collapse,
    }[config.command]
    return runner(config)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_command(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SolverError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
