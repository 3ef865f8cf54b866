"""Ground-state solver, reduced atomic density matrix, and spin moments.

`solve_ground` drives the displaced-basis Hamiltonian of `model` through an
adaptive boson-truncation loop, watching both the ground energy and the
two-atom quantum Fisher information until neither moves.  Parity doublets
above the transition collapse to a quasi-degenerate pair whose numerically
returned eigenvectors mix the parity sectors; `resolve_quasi_degeneracy`
restores a parity eigenstate by choosing the in-doublet mixing angle that
annihilates <J_+>.  When the splitting underflows entirely the Krylov
solver sees only one member of the doublet; `restore_hidden_parity`
detects the leftover <J_+> and rebuilds the partner from the parity image
of the coefficients.

All spin observables are computed in the original (unrotated) frame through
the operator dictionary of `model`: the solver basis diagonalizes the
original J_x, so original-frame operators are represented as

    J_x -> diag(m)      J_z -> -J_x'      J_y -> J_y'      J_+ -> J_z' + i J_y'

with primes denoting the standard spin matrices on the solver's m labels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .model import (
    ModelParams,
    OperatorMatrix,
    TruncationSpec,
    assemble_hamiltonian_coherent,
    assemble_hamiltonian_fock,
    displacement_overlap_stack,
)

# Below this spectral gap the lowest pair is treated as a parity doublet.
DEGENERACY_GAP = 1e-8

# Parity restoration targets |<J_+>| below this.
PARITY_TARGET = 1e-6
# If no mixing angle reaches this, the state is flagged unresolved.
PARITY_FAILURE = 1e-4

# Gram eigenvalues in [-PSD_CLAMP, 0) are truncation dust and get clamped;
# anything more negative means the reduced state is genuinely broken.
PSD_CLAMP = 1e-8

_GRAM_BAND_FLOOR = 1e-30


class SolverError(RuntimeError):
    """Base class for ground-solver failures."""


class ConvergenceError(SolverError):
    """Eigensolve or truncation loop failed; carries the diagnostic trail."""

    def __init__(self, message: str, *, residual: float | None = None, trace=None):
        super().__init__(message)
        self.residual = residual
        self.trace = trace or []


class GramPositivityError(SolverError):
    """Reduced atomic density matrix has a non-physical negative eigenvalue."""


@dataclass(frozen=True)
class SolverOptions:
    """Eigensolver policy: dense below `dense_cutoff`, Lanczos above."""

    dense_cutoff: int = 2000
    arpack_tol: float = 1e-12
    residual_tol: float = 1e-10
    ncv: int = 64
    maxiter: int | None = None


@dataclass(frozen=True)
class EigenPair:
    energy: float
    vector: np.ndarray
    gap: float
    excited: np.ndarray


@dataclass(frozen=True)
class ConvergenceRound:
    n_tr: int
    energy: float
    energy_delta: float | None
    obs_delta: float | None


@dataclass(eq=False)
class GroundState:
    """Converged ground state in the displaced product basis.

    `coeffs[m_index, k]` is the amplitude on sector m = m_index - j, displaced
    Fock level k.  `convergence` records one entry per truncation round.
    """

    params: ModelParams
    coeffs: np.ndarray
    energy: float
    gap: float
    n_tr_used: int
    degenerate_flag: bool
    convergence: list[ConvergenceRound] = field(default_factory=list)
    excited_coeffs: np.ndarray | None = None
    parity_resolved: bool = False
    parity_ok: bool = True


@dataclass(eq=False)
class AtomicDensityMatrix:
    """Reduced N-atom density matrix in the solver (rotated) spin basis."""

    entries: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class SpinMoments:
    """Original-frame collective moments of a ground state."""

    jz: float
    jz2: float
    jp: complex
    jp2: complex
    jx2: float
    jy2: float
    anti_pz: complex

    def casimir_residual(self, j: float) -> float:
        return abs(self.jx2 + self.jy2 + self.jz2 - j * (j + 1.0))


def _canonical_sign(vec: np.ndarray) -> np.ndarray:
    flat = vec.ravel()
    lead = np.argmax(np.abs(flat))
    return -vec if flat[lead] < 0.0 else vec


def lowest_eigenpair(
    hamiltonian: OperatorMatrix | np.ndarray, options: SolverOptions | None = None
) -> EigenPair:
    """Two lowest eigenpairs of a symmetric Hamiltonian, deterministically.

    Dense LAPACK below `dense_cutoff`; above it, ARPACK Lanczos on the
    matrix-free block form with a fixed all-ones start vector so repeated
    runs agree bit for bit.  The residual of the returned ground vector is
    verified against `residual_tol` relative to max(1, |E|).
    """
    opts = options or SolverOptions()
    if isinstance(hamiltonian, OperatorMatrix):
        dim = hamiltonian.dim
        apply_h = hamiltonian.matvec
    else:
        hamiltonian = np.asarray(hamiltonian)
        dim = hamiltonian.shape[0]
        apply_h = lambda v: hamiltonian @ v  # noqa: E731
    if dim < 2:
        raise ValueError("need dimension >= 2 for a ground pair")

    if dim <= opts.dense_cutoff:
        dense = (
            hamiltonian.to_dense()
            if isinstance(hamiltonian, OperatorMatrix)
            else hamiltonian
        )
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=(0, 1))
    else:
        if isinstance(hamiltonian, OperatorMatrix):
            op = hamiltonian.aslinearoperator()
        else:
            op = sparse.linalg.aslinearoperator(hamiltonian)
        v0 = np.full(dim, 1.0 / math.sqrt(dim))
        try:
            vals, vecs = eigsh(
                op,
                k=2,
                which="SA",
                v0=v0,
                tol=opts.arpack_tol,
                ncv=min(dim - 1, opts.ncv),
                maxiter=opts.maxiter,
            )
        except ArpackNoConvergence as exc:
            best = None
            if exc.eigenvalues is not None and len(exc.eigenvalues):
                vec = exc.eigenvectors[:, 0]
                best = float(
                    np.linalg.norm(apply_h(vec) - exc.eigenvalues[0] * vec)
                )
            raise ConvergenceError(
                f"Lanczos did not converge at dim {dim}", residual=best
            ) from exc
    order = np.argsort(vals)
    vals = vals[order]
    vecs = vecs[:, order]
    ground = _canonical_sign(vecs[:, 0])
    excited = _canonical_sign(vecs[:, 1])
    energy = float(vals[0])
    residual = float(np.linalg.norm(apply_h(ground) - energy * ground))
    bound = opts.residual_tol * max(1.0, abs(energy))
    if residual > bound:
        raise ConvergenceError(
            f"ground residual {residual:.3e} exceeds {bound:.3e} at dim {dim}",
            residual=residual,
        )
    return EigenPair(
        energy=energy, vector=ground, gap=float(vals[1] - vals[0]), excited=excited
    )


def _collective_ops(n_atoms: int, frame: str) -> dict[str, sparse.spmatrix]:
    """Sparse matrices for the original-frame observables used downstream.

    frame 'rotated': matrices act on the solver's m labels via the dictionary
    in the module docstring.  frame 'original': plain |j,m> labels.
    """
    j = 0.5 * n_atoms
    m = np.arange(n_atoms + 1) - j
    t = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1.0))
    jz_std = sparse.diags(m)
    jp_std = sparse.diags(t, -1)
    jm_std = sparse.diags(t, 1)
    jx_std = 0.5 * (jp_std + jm_std)
    jy_std = -0.5j * (jp_std - jm_std)
    if frame == "rotated":
        op_x, op_y, op_z = jz_std, jy_std, -jx_std
    elif frame == "original":
        op_x, op_y, op_z = jx_std, jy_std, jz_std
    else:
        raise ValueError(f"unknown frame {frame!r}")
    op_plus = (op_x + 1j * op_y).tocsr()
    return {
        "jz": op_z.tocsr(),
        "jz2": (op_z @ op_z).tocsr(),
        "jp": op_plus,
        "jp2": (op_plus @ op_plus).tocsr(),
        "jx2": (op_x @ op_x).tocsr(),
        "jy2": (op_y @ op_y).tocsr(),
        "anti_pz": (op_plus @ op_z + op_z @ op_plus).tocsr(),
    }


def _band_trace(op: sparse.spmatrix, bands: dict[int, np.ndarray]) -> complex:
    """Tr(G O) for symmetric G given through its diagonals G[m, m+delta]."""
    total = 0.0 + 0.0j
    for delta, band in bands.items():
        total += np.dot(band, op.diagonal(-delta))
        if delta:
            total += np.dot(band, op.diagonal(delta))
    return total


def _moments_from_bands(
    bands: dict[int, np.ndarray], n_atoms: int, frame: str
) -> SpinMoments:
    ops = _collective_ops(n_atoms, frame)
    j = 0.5 * n_atoms
    return SpinMoments(
        jz=float(_band_trace(ops["jz"], bands).real),
        jz2=float(_band_trace(ops["jz2"], bands).real),
        jp=complex(_band_trace(ops["jp"], bands)),
        jp2=complex(_band_trace(ops["jp2"], bands)),
        jx2=float(_band_trace(ops["jx2"], bands).real),
        jy2=float(_band_trace(ops["jy2"], bands).real),
        anti_pz=complex(_band_trace(ops["anti_pz"], bands)),
    )


def _gram_bands(
    coeffs: np.ndarray, params: ModelParams, deltas: tuple[int, ...]
) -> dict[int, np.ndarray]:
    """Diagonals G[m, m+delta] of the reduced atomic matrix, delta >= 0 only.

    G[m, m'] = sum_{k,l} coeffs[m', k] coeffs[m, l] <k|D((m'-m) d0)|l> with
    d0 the inter-sector displacement step; the delta = 0 overlap is exactly
    the identity, so the diagonal band is the per-sector norm profile.
    """
    n_sect = coeffs.shape[0]
    n_tr = coeffs.shape[1] - 1
    d0 = 2.0 * params.lam / (params.omega * math.sqrt(params.n_atoms))
    ds = d0 * np.asarray(deltas, dtype=float)
    stack = displacement_overlap_stack(n_tr, ds)
    bands: dict[int, np.ndarray] = {}
    for pos, delta in enumerate(deltas):
        if delta >= n_sect:
            continue
        w = stack[pos]
        upper = coeffs[delta:]
        lower = coeffs[: n_sect - delta]
        bands[delta] = np.einsum("mk,mk->m", upper, lower @ w.T)
    return bands


def spin_moments_from_state(state: GroundState) -> SpinMoments:
    """Original-frame moments straight from the state, without the full Gram."""
    bands = _gram_bands(state.coeffs, state.params, (0, 1, 2))
    return _moments_from_bands(bands, state.params.n_atoms, "rotated")


def spin_moments(state: GroundState, gram: AtomicDensityMatrix) -> SpinMoments:
    """Original-frame moments from a prebuilt reduced density matrix."""
    n_atoms = state.params.n_atoms
    bands = {
        delta: np.ascontiguousarray(np.diagonal(gram.entries, delta))
        for delta in range(min(2, n_atoms) + 1)
    }
    return _moments_from_bands(bands, n_atoms, "rotated")


def boson_gram(state: GroundState) -> AtomicDensityMatrix:
    """Reduced N-atom density matrix by tracing out the displaced boson ladders.

    Sector pairs whose displaced-overlap matrix underflows contribute nothing
    and are skipped.  Tiny negative eigenvalues (truncation dust) are clamped
    to zero and the spectrum renormalized; violations beyond PSD_CLAMP raise.
    """
    coeffs = state.coeffs
    n_sect = coeffs.shape[0]
    bands = _gram_bands(coeffs, state.params, tuple(range(n_sect)))
    entries = np.zeros((n_sect, n_sect))
    idx = np.arange(n_sect)
    for delta, band in bands.items():
        if delta and np.abs(band).max() < _GRAM_BAND_FLOOR:
            continue
        entries[idx[: n_sect - delta], idx[: n_sect - delta] + delta] = band
        if delta:
            entries[idx[: n_sect - delta] + delta, idx[: n_sect - delta]] = band
    trace = float(np.trace(entries))
    if abs(trace - 1.0) > 1e-10:
        raise GramPositivityError(f"reduced matrix trace {trace} deviates from 1")
    eigenvalues, eigenvectors = scipy.linalg.eigh(entries)
    if eigenvalues[0] < -PSD_CLAMP:
        raise GramPositivityError(
            f"reduced matrix eigenvalue {eigenvalues[0]:.3e} below -{PSD_CLAMP}"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    eigenvalues /= eigenvalues.sum()
    return AtomicDensityMatrix(
        entries=entries, eigenvalues=eigenvalues, eigenvectors=eigenvectors
    )


def resolve_quasi_degeneracy(
    state: GroundState, hamiltonian: OperatorMatrix | None = None
) -> GroundState:
    """Restore a parity eigenstate inside a quasi-degenerate ground doublet.

    For real doublet vectors v0, v1 the original-frame <J_y> vanishes
    identically, so <J_+> at mixing angle theta reduces to the real quadratic
    form <J_x'> = A cos^2 + 2B cos sin + C sin^2 on the solver's diagonal
    axis, and the annihilating angles come out in closed form.  Of the two
    zeros the one with larger cos(2 theta) is kept (the lower-energy
    combination, since E(theta) decreases with cos(2 theta) toward E0).
    Non-degenerate states pass through untouched.
    """
    if not state.degenerate_flag or state.excited_coeffs is None:
        return state
    v0 = state.coeffs
    v1 = state.excited_coeffs
    m = np.arange(v0.shape[0]) - 0.5 * state.params.n_atoms
    a_00 = float(np.einsum("mk,mk,m->", v0, v0, m))
    b_01 = float(np.einsum("mk,mk,m->", v0, v1, m))
    c_11 = float(np.einsum("mk,mk,m->", v1, v1, m))
    mean = 0.5 * (a_00 + c_11)
    half = 0.5 * (a_00 - c_11)
    radius = math.hypot(half, b_01)
    if radius < 1e-300:
        theta = 0.0
    else:
        phi = math.atan2(b_01, half)
        z = -mean / radius
        if abs(z) <= 1.0:
            spread = math.acos(max(-1.0, min(1.0, z)))
            candidates = [0.5 * (phi + spread), 0.5 * (phi - spread)]
            theta = max(candidates, key=lambda t: math.cos(2.0 * t))
        else:
            theta = 0.5 * (phi + math.pi)
    mixed = math.cos(theta) * v0 + math.sin(theta) * v1
    mixed /= np.linalg.norm(mixed)
    mixed = _canonical_sign(mixed)
    achieved = abs(
        mean + half * math.cos(2.0 * theta) + b_01 * math.sin(2.0 * theta)
    )
    if achieved >= PARITY_FAILURE:
        warnings.warn(
            f"parity restoration left |<J_+>| = {achieved:.3e}; state flagged",
            RuntimeWarning,
            stacklevel=2,
        )
    return replace(
        state,
        coeffs=mixed,
        parity_resolved=True,
        parity_ok=achieved < PARITY_FAILURE,
    )


def parity_image(coeffs: np.ndarray) -> np.ndarray:
    """Parity operation on solver coefficients: w[m, k] = (-1)^k v[-m, k].

    The conserved parity flips the field (Fock signs) and reverses the
    solver's diagonal spin axis (sector order); the displacements follow
    along since the sector displacement is odd in m.  A global phase
    (-i)^(2j) is dropped.
    """
    alt = (-1.0) ** np.arange(coeffs.shape[1])
    return np.ascontiguousarray((coeffs * alt)[::-1, :])


def restore_hidden_parity(
    state: GroundState, hamiltonian: OperatorMatrix
) -> GroundState:
    """Repair a symmetry-broken state whose doublet partner the solver missed.

    Deep in the superradiant phase the doublet splitting underflows and a
    Krylov solver can return a single arbitrary parity mixture while
    reporting the gap to the next excitation band; slightly closer to the
    transition a resolved but tiny splitting pollutes the returned vector at
    residual/gap.  Both cases leave a macroscopic <J_+>.  The doublet is
    reconstructed structurally from the parity image of the returned vector
    and the usual mixing-angle resolution is applied.  States with <J_+>
    already below PARITY_FAILURE pass through untouched.
    """
    moments = spin_moments_from_state(state)
    if abs(moments.jp) <= PARITY_FAILURE:
        return state
    v = state.coeffs
    w = parity_image(v)
    energy_w = float(
        np.vdot(w, hamiltonian.matvec(w.ravel()).reshape(w.shape)).real
    )
    scale = max(1.0, abs(state.energy))
    if abs(energy_w - state.energy) > 1e-8 * scale:
        raise SolverError(
            f"state breaks parity (|<J_+>| = {abs(moments.jp):.3e}) but its "
            f"parity image is not degenerate: E = {state.energy!r} vs "
            f"{energy_w!r}"
        )
    overlap = float(np.vdot(v, w).real)
    w_perp = w - overlap * v
    norm = float(np.linalg.norm(w_perp))
    if norm < 1e-8:
        raise SolverError(
            "parity diagnosis inconsistent: macroscopic <J_+> on a "
            "parity-pure state"
        )
    doubled = replace(
        state, degenerate_flag=True, excited_coeffs=w_perp / norm
    )
    return resolve_quasi_degeneracy(doubled, hamiltonian)


def _convergence_observable(state: GroundState, params: ModelParams) -> float:
    from .qfi import build_two_atom_state, qfi_closed_form

    if params.n_atoms < 2:
        return 0.0
    moments = spin_moments_from_state(state)
    return qfi_closed_form(build_two_atom_state(moments, params.n_atoms)).value


def solve_ground(
    params: ModelParams,
    trunc: TruncationSpec | None = None,
    options: SolverOptions | None = None,
) -> GroundState:
    """Adaptive-truncation ground state of the displaced-basis Hamiltonian.

    Raises ConvergenceError with the recorded rounds if the truncation cap is
    reached before both the relative energy change and the two-atom QFI
    change fall under the configured tolerances.
    """
    trunc = trunc or TruncationSpec()
    rounds: list[ConvergenceRound] = []
    prev_energy: float | None = None
    prev_obs: float | None = None
    n_tr = trunc.n_tr
    while True:
        ham = assemble_hamiltonian_coherent(params, n_tr)
        pair = lowest_eigenpair(ham, options)
        cols = n_tr + 1
        degenerate = pair.gap < DEGENERACY_GAP
        state = GroundState(
            params=params,
            coeffs=pair.vector.reshape(-1, cols),
            energy=pair.energy,
            gap=pair.gap,
            n_tr_used=n_tr,
            degenerate_flag=degenerate,
            convergence=rounds,
            excited_coeffs=pair.excited.reshape(-1, cols) if degenerate else None,
        )
        if degenerate:
            state = resolve_quasi_degeneracy(state, ham)
        else:
            state = restore_hidden_parity(state, ham)
        obs = _convergence_observable(state, params)
        if prev_energy is None:
            rounds.append(ConvergenceRound(n_tr, pair.energy, None, None))
        else:
            d_energy = abs(pair.energy - prev_energy) / max(1.0, abs(pair.energy))
            d_obs = abs(obs - prev_obs)
            rounds.append(ConvergenceRound(n_tr, pair.energy, d_energy, d_obs))
            if d_energy < trunc.tol_energy and d_obs < trunc.tol_obs:
                return state
        prev_energy, prev_obs = pair.energy, obs
        n_tr += trunc.n_tr_step
        if n_tr > trunc.n_tr_max:
            raise ConvergenceError(
                f"truncation cap {trunc.n_tr_max} reached without convergence",
                trace=rounds,
            )


@dataclass(eq=False)
class FockGroundState:
    """Dense Fock-basis oracle result, original frame throughout."""

    params: ModelParams
    energy: float
    gap: float
    amplitudes: np.ndarray
    rho_atoms: np.ndarray


def solve_ground_fock_oracle(
    params: ModelParams, n_max: int
) -> tuple[FockGroundState, SpinMoments]:
    """Independent small-system ground state in the plain Fock basis.

    Dense diagonalization, no displaced ladders, no frame rotation; used to
    cross-check the coherent-basis pipeline end to end.
    """
    ham = assemble_hamiltonian_fock(params, n_max)
    vals, vecs = scipy.linalg.eigh(ham)
    psi = vecs[:, 0].reshape(n_max + 1, params.n_atoms + 1)
    rho = psi.T @ psi
    max_delta = min(2, params.n_atoms)
    bands = {
        delta: np.ascontiguousarray(np.diagonal(rho, delta))
        for delta in range(max_delta + 1)
    }
    moments = _moments_from_bands(bands, params.n_atoms, "original")
    fock = FockGroundState(
        params=params,
        energy=float(vals[0]),
        gap=float(vals[1] - vals[0]),
        amplitudes=psi,
        rho_atoms=rho,
    )
    return fock, moments
