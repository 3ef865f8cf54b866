"""Independent reference implementations used only by the tests.

Everything here deliberately avoids the package's own algorithms: overlaps
come from a dense matrix exponential, small ground states from a brute-force
qubit-product-space diagonalization (no symmetric-subspace reduction, no
displaced basis), and QFI from the textbook eigendecomposition double sum.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import eigsh

from dicke_qfi.qfi import TwoAtomXState


def displacement_via_expm(d: float, n_rows: int, n_cols: int) -> np.ndarray:
    """Top-left block of <k|exp(d(a^dag - a))|l> from a dense exponential.

    The working dimension carries a margin of d^2 + 8|d|sqrt(n+1) + 40 above
    the requested block so the truncated exponential is exact there to
    machine precision.
    """
    need = max(n_rows, n_cols)
    dim = int(need + abs(d) ** 2 + 8.0 * abs(d) * np.sqrt(need + 1.0) + 40)
    lower = np.diag(np.sqrt(np.arange(1, dim)), k=-1)
    gen = d * (lower - lower.T)
    block = expm(gen)[:n_rows, :n_cols]
    return np.ascontiguousarray(block)


def _pauli() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # index 0 = down so the pair index enumerates (dd, du, ud, uu)
    sz = np.array([[-1.0, 0.0], [0.0, 1.0]])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sy = np.array([[0.0, 1.0j], [-1.0j, 0.0]])
    return sx, sy, sz


def _site_operator(op: np.ndarray, site: int, n_sites: int) -> sparse.spmatrix:
    mat = sparse.identity(1, format="csr")
    for i in range(n_sites):
        factor = sparse.csr_matrix(op) if i == site else sparse.identity(2, format="csr")
        mat = sparse.kron(mat, factor, format="csr")
    return mat


def qubit_embedding_ground(omega, delta, lam, n_atoms, n_max):
    """Ground state in the full boson x (C^2)^N product space.

    Returns (energy, gap, pair_rho, moments) with pair_rho the exact reduced
    density matrix of the first two atoms on the (dd, du, ud, uu) basis and
    moments a dict of collective-spin expectation values.  No collective-spin
    or displaced-basis machinery is shared with the package.
    """
    sx, sy, sz = _pauli()
    nb = n_max + 1
    lower = sparse.csr_matrix(np.diag(np.sqrt(np.arange(1, nb)), k=-1))
    number = sparse.csr_matrix(np.diag(np.arange(nb, dtype=float)))
    position = lower + lower.T

    dim_spin = 2**n_atoms
    jx = sparse.csr_matrix((dim_spin, dim_spin))
    jy = sparse.csr_matrix((dim_spin, dim_spin), dtype=complex)
    jz = sparse.csr_matrix((dim_spin, dim_spin))
    for site in range(n_atoms):
        jx = jx + 0.5 * _site_operator(sx, site, n_atoms)
        jy = jy + 0.5 * _site_operator(sy, site, n_atoms)
        jz = jz + 0.5 * _site_operator(sz, site, n_atoms)

    eye_b = sparse.identity(nb, format="csr")
    eye_s = sparse.identity(dim_spin, format="csr")
    ham = (
        omega * sparse.kron(number, eye_s)
        + delta * sparse.kron(eye_b, jz)
        + (2.0 * lam / np.sqrt(n_atoms)) * sparse.kron(position, jx)
    )
    vals, vecs = eigsh(ham.tocsc(), k=2, which="SA")
    order = np.argsort(vals)
    energy = float(vals[order[0]])
    gap = float(vals[order[1]] - vals[order[0]])
    psi = vecs[:, order[0]]

    blocks = psi.reshape(nb, 4, dim_spin // 4)
    pair_rho = np.einsum("abr,acr->bc", blocks, blocks.conj())

    jp = jx + 1.0j * jy
    full = lambda op: sparse.kron(eye_b, op).tocsr()
    expect = lambda op: complex(np.vdot(psi, full(op) @ psi))
    moments = {
        "jz": expect(jz).real,
        "jz2": expect(jz @ jz).real,
        "jx2": expect(jx @ jx).real,
        "jy2": expect(jy @ jy).real,
        "jp": expect(jp),
        "jp2": expect(jp @ jp),
    }
    return energy, gap, pair_rho, moments


def dense_qfi(rho: np.ndarray, generator: np.ndarray, floor: float = 1e-12) -> float:
    """Textbook QFI from a full eigendecomposition of rho.

    F = 2 sum_{i,j: p_i+p_j>floor} (p_i-p_j)^2 / (p_i+p_j) |<i|G|j>|^2.
    """
    p, v = np.linalg.eigh(rho)
    p = np.clip(p, 0.0, None)
    g = v.conj().T @ generator @ v
    total = 0.0
    for i in range(len(p)):
        for j in range(len(p)):
            s = p[i] + p[j]
            if s > floor:
                total += 2.0 * (p[i] - p[j]) ** 2 / s * abs(g[i, j]) ** 2
    return float(total)


def random_x_state(rng: np.random.Generator) -> TwoAtomXState:
    """Valid random X-state with the solver-state structure (y = w, x = 0).

    The trace splits by a Dirichlet draw, u fills a uniform fraction of its
    positivity bound sqrt(v+ v-), so rank-deficient corners (p2 = 0 always,
    p- near 0 at full fraction) appear with sizable probability.
    """
    v_plus, v_minus, twow = rng.dirichlet((1.0, 1.0, 1.0))
    w = twow / 2.0
    phase = np.exp(2.0j * np.pi * rng.uniform())
    u = rng.uniform() * np.sqrt(v_plus * v_minus) * phase
    return TwoAtomXState(
        v_plus=float(v_plus),
        v_minus=float(v_minus),
        w=float(w),
        y=float(w),
        u=complex(u),
        x_plus=0.0,
        x_minus=0.0,
    )
