"""Quantum Fisher information of the reduced two-atom and N-atom states.

The phase is imprinted by a collective rotation exp(-i theta U); all routes
evaluate F at theta = 0.  For the reduced two-atom state the generator is
sigma_z on one atom of the pair, diag(-1, -1, +1, +1) on the basis
(|dd>, |du>, |ud>, |uu>), whose eigenvalue spread bounds F by 4.  Four
independent routes are kept deliberately and cross-checked in the tests: the
closed form and the spin form catch algebra slips in each other, the
spectral and SLD routes exercise the generic machinery that the N-atom
computation relies on.

Permutation symmetry plus parity force the reduced two-atom state into X
form; its entries come from collective first and second moments alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ground import AtomicDensityMatrix, SpinMoments

# Reduced-state eigenvalues below this are treated as exact zeros in the
# spectral weights; the variance term still runs over the full basis.
EIGENVALUE_FLOOR = 1e-12

GENERATOR_AXES = ("x", "y", "z")

# Selected empirically: at N = 256, D = 1 the x-axis collective rotation is
# the one whose scaled QFI tracks the thermodynamic-limit curve across the
# whole coupling range; y and z stay near zero or saturate, see
# tests/test_qfi.py::test_default_axis_dominates.
DEFAULT_GENERATOR_AXIS = "x"


class XStateInvariantError(ValueError):
    """Reduced two-atom matrix violated a structural identity."""


@dataclass(frozen=True)
class TwoAtomXState:
    """X-form two-atom density matrix in the basis (|dd>, |du>, |ud>, |uu>).

    v_plus and v_minus are the |uu> and |dd> populations, w the symmetric
    single-flip population, y the coherence between |du> and |ud>, u the
    double-flip coherence <dd|rho|uu>, and x_plus, x_minus the parity-odd
    single-flip coherences (zero for every state produced here).
    """

    v_plus: float
    v_minus: float
    w: float
    y: float
    u: complex
    x_plus: complex
    x_minus: complex

    def matrix(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        out[0, 0] = self.v_minus
        out[3, 3] = self.v_plus
        out[1, 1] = out[2, 2] = self.w
        out[1, 2] = out[2, 1] = self.y
        out[0, 3] = self.u
        out[3, 0] = np.conj(self.u)
        out[0, 1] = out[0, 2] = np.conj(self.x_plus)
        out[1, 0] = out[2, 0] = self.x_plus
        out[3, 1] = out[3, 2] = self.x_minus
        out[1, 3] = out[2, 3] = np.conj(self.x_minus)
        return out


def build_two_atom_state(moments: SpinMoments, n_atoms: int) -> TwoAtomXState:
    """Two-atom reduction from collective moments, with identity checks.

    Every entry is a linear combination of first and second collective
    moments; the construction verifies unit trace, the Casimir-driven w = y
    identity, positivity of the double-flip block, and the parity-forced
    vanishing of the single-flip coherences, and names the first identity
    that fails.
    """
    n = n_atoms
    if n < 2:
        raise ValueError("two-atom reduction needs n_atoms >= 2")
    denom = 1.0 / (n * (n - 1.0))
    jz, jz2 = moments.jz, moments.jz2
    v_plus = 0.25 * denom * (n * n - 2.0 * n + 4.0 * jz2 + 4.0 * (n - 1.0) * jz)
    v_minus = 0.25 * denom * (n * n - 2.0 * n + 4.0 * jz2 - 4.0 * (n - 1.0) * jz)
    w = 0.25 * denom * (n * n - 4.0 * jz2)
    y = denom * (moments.jx2 + moments.jy2 - 0.5 * n)
    u = denom * moments.jp2
    x_plus = 0.5 * denom * ((n - 1.0) * moments.jp + moments.anti_pz)
    x_minus = 0.5 * denom * ((n - 1.0) * moments.jp - moments.anti_pz)
    trace = v_plus + v_minus + 2.0 * w
    if abs(trace - 1.0) > 1e-9:
        raise XStateInvariantError(f"unit trace violated: trace = {trace!r}")
    if abs(w - y) > 1e-8:
        raise XStateInvariantError(f"w = y identity violated: w - y = {w - y!r}")
    if v_plus * v_minus - abs(u) ** 2 < -1e-9:
        raise XStateInvariantError(
            f"double-flip positivity violated: v+v- - |u|^2 = {v_plus * v_minus - abs(u) ** 2!r}"
        )
    if abs(x_plus) >= 1e-6 or abs(x_minus) >= 1e-6:
        raise XStateInvariantError(
            f"parity-odd coherences not suppressed: |x+|, |x-| = "
            f"{abs(x_plus):.3e}, {abs(x_minus):.3e}"
        )
    # clamp truncation dust so downstream spectra stay physical
    v_plus = max(v_plus, 0.0)
    v_minus = max(v_minus, 0.0)
    w = max(w, 0.0)
    return TwoAtomXState(
        v_plus=v_plus, v_minus=v_minus, w=w, y=y, u=u, x_plus=x_plus, x_minus=x_minus
    )


@dataclass(frozen=True)
class XStateSpectrum:
    """Eigensystem of an X state, ordered (p1, p2, p_plus, p_minus).

    p1 = 2w and p2 = 0 belong to the symmetric and antisymmetric single-flip
    combinations; p_plus and p_minus to the (|dd>, |uu>) block with
    discriminant gamma = (v+ - v-)^2 + 4|u|^2.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gamma: float


def x_state_spectrum(state: TwoAtomXState) -> XStateSpectrum:
    v_p, v_m, u = state.v_plus, state.v_minus, state.u
    gamma = (v_p - v_m) ** 2 + 4.0 * abs(u) ** 2
    root = math.sqrt(gamma)
    p_plus = 0.5 * (v_p + v_m + root)
    p_minus = 0.5 * (v_p + v_m - root)
    vectors = np.zeros((4, 4), dtype=complex)
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    vectors[1, 0] = vectors[2, 0] = inv_sqrt2
    vectors[1, 1] = inv_sqrt2
    vectors[2, 1] = -inv_sqrt2
    diff = v_p - v_m
    if abs(u) < 1e-150:
        # decoupled populations; for diff = 0 the degenerate branch returns
        # the canonical basis vectors
        if diff >= 0.0:
            vectors[3, 2] = 1.0
            vectors[0, 3] = 1.0
        else:
            vectors[0, 2] = 1.0
            vectors[3, 3] = 1.0
    else:
        # components (a, 1) on (|dd>, |uu>) with a = (root -+ diff)/(2 conj(u)),
        # rewritten per branch to avoid cancellation between diff and root
        if diff >= 0.0:
            a_plus = 2.0 * u / (root + diff)
            a_minus = -(root + diff) / (2.0 * np.conj(u))
        else:
            a_plus = (root - diff) / (2.0 * np.conj(u))
            a_minus = -2.0 * u / (root - diff)
        for col, a in ((2, a_plus), (3, a_minus)):
            norm = math.sqrt(abs(a) ** 2 + 1.0)
            vectors[0, col] = a / norm
            vectors[3, col] = 1.0 / norm
    eigenvalues = np.array([2.0 * state.w, 0.0, p_plus, p_minus])
    return XStateSpectrum(eigenvalues=eigenvalues, eigenvectors=vectors, gamma=gamma)


def two_atom_generator() -> np.ndarray:
    """sigma_z on the first atom of the pair: diag(-1, -1, 1, 1) on (|dd>,|du>,|ud>,|uu>)."""
    return np.diag([-1.0, -1.0, 1.0, 1.0])


@dataclass(frozen=True)
class QfiValue:
    value: float
    route: str
    generator: str


def qfi_closed_form(state: TwoAtomXState) -> QfiValue:
    """F = 16 (|u|^2 / (v+ + v-) + w / 2) for the two-atom phase generator."""
    pop = state.v_plus + state.v_minus
    if pop <= 0.0:
        if abs(state.u) > 1e-12:
            raise XStateInvariantError(
                "double-flip coherence without outer population"
            )
        coherence = 0.0
    else:
        coherence = abs(state.u) ** 2 / pop
    value = 16.0 * (coherence + 0.5 * state.w)
    return QfiValue(value=float(value), route="closed_form", generator="two_atom_z")


def qfi_spin_form(moments: SpinMoments, n_atoms: int) -> QfiValue:
    """Two-atom QFI straight from collective moments, bypassing the X state."""
    n = n_atoms
    if n < 2:
        raise ValueError("two-atom QFI needs n_atoms >= 2")
    jz2 = moments.jz2
    outer = n * n - 2.0 * n + 4.0 * jz2
    first = 0.0
    if outer > 0.0:
        first = 32.0 * abs(moments.jp2) ** 2 / (n * (n - 1.0) * outer)
    second = (2.0 * n * n - 8.0 * jz2) / (n * (n - 1.0))
    return QfiValue(
        value=float(first + second), route="spin_form", generator="two_atom_z"
    )


def _prepare_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    p = np.asarray(eigenvalues, dtype=float)
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValueError(f"spectrum not normalized: sum = {p.sum()!r}")
    if p.min() < -1e-10:
        raise ValueError(f"negative probability {p.min()!r}")
    p = np.clip(p, 0.0, None)
    return np.where(p >= EIGENVALUE_FLOOR, p, 0.0)


def qfi_spectral_general(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    generator: np.ndarray,
    label: str = "generic",
) -> QfiValue:
    """Spectral-decomposition QFI for an arbitrary mixed state.

    F = sum_i 4 p_i (dU^2)_i - sum_{i != j} 8 p_i p_j / (p_i + p_j) |U_ij|^2
    with U in the eigenbasis; the variance term runs over the full basis
    including zero-probability states, which is what makes the expression
    equal the pair form 2 sum (p_i - p_j)^2 / (p_i + p_j) |U_ij|^2.
    """
    p = _prepare_spectrum(eigenvalues)
    vec = np.asarray(eigenvectors)
    u_eig = vec.conj().T @ np.asarray(generator) @ vec
    abs_sq = np.abs(u_eig) ** 2
    variance = abs_sq.sum(axis=1) - np.diagonal(abs_sq)
    f_var = 4.0 * float(np.dot(p, variance))
    pair_sum = p[:, None] + p[None, :]
    denom = np.where(pair_sum >= EIGENVALUE_FLOOR, pair_sum, np.inf)
    weight = 8.0 * p[:, None] * p[None, :] / denom
    np.fill_diagonal(weight, 0.0)
    f_cross = float((weight * abs_sq).sum())
    return QfiValue(
        value=max(f_var - f_cross, 0.0), route="spectral", generator=label
    )


def qfi_via_sld(
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    generator: np.ndarray,
    label: str = "generic",
) -> QfiValue:
    """QFI through the symmetric logarithmic derivative.

    Builds L_ij = 2 (d_theta rho)_ij / (p_i + p_j) from d_theta rho = i[rho, U]
    in the eigenbasis and returns Tr(rho L^2); matrix elements with
    p_i + p_j below the floor are set to zero.
    """
    p = _prepare_spectrum(eigenvalues)
    vec = np.asarray(eigenvectors)
    u_eig = vec.conj().T @ np.asarray(generator) @ vec
    drho = 1j * (p[:, None] - p[None, :]) * u_eig
    pair_sum = p[:, None] + p[None, :]
    denom = np.where(pair_sum >= EIGENVALUE_FLOOR, pair_sum, np.inf)
    sld = 2.0 * drho / denom
    value = float(np.einsum("i,ik,ik->", p, sld, sld.conj()).real)
    return QfiValue(value=max(value, 0.0), route="sld", generator=label)


def atomic_generator_matrix(axis: str, n_atoms: int) -> np.ndarray:
    """Collective generator J_axis, original frame, on the solver's m labels.

    Uses the operator dictionary of `ground`: original J_x is diagonal in the
    solver basis, original J_z maps to -J_x', original J_y to J_y'.
    """
    if axis not in GENERATOR_AXES:
        raise ValueError(f"axis must be one of {GENERATOR_AXES}, got {axis!r}")
    j = 0.5 * n_atoms
    m = np.arange(n_atoms + 1) - j
    if axis == "x":
        return np.diag(m)
    t = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1.0))
    jp = np.zeros((n_atoms + 1, n_atoms + 1))
    jp[np.arange(1, n_atoms + 1), np.arange(n_atoms)] = t
    if axis == "y":
        return -0.5j * (jp - jp.T)
    return -0.5 * (jp + jp.T)


def qfi_atomic(
    rho: AtomicDensityMatrix,
    generator: str = DEFAULT_GENERATOR_AXIS,
    n_atoms: int | None = None,
) -> QfiValue:
    """QFI of the reduced N-atom state under a collective rotation.

    `generator` picks the original-frame rotation axis; the matrix is built
    in the solver basis and handed to the generic spectral route using the
    cached eigendecomposition of the reduced matrix.
    """
    dim = rho.entries.shape[0]
    n = dim - 1 if n_atoms is None else n_atoms
    if n + 1 != dim:
        raise ValueError(f"n_atoms {n} inconsistent with matrix dimension {dim}")
    gen = atomic_generator_matrix(generator, n)
    return qfi_spectral_general(
        rho.eigenvalues, rho.eigenvectors, gen, label=f"atomic_{generator}"
    )
