"""Dense complex linear algebra for small Hermitian problems.

Every operator in the package is a square ``complex128`` numpy array. The
helpers here cover the handful of operations the simulations need:
eigendecomposition with deterministic ordering, spectral matrix exponentials,
tensor products and density-matrix diagnostics.
"""

from __future__ import annotations

from functools import reduce
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, InvalidState, NonHermitianInput

STRUCT_TOL = 1e-10
INPUT_TOL = 1e-8


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a square complex128 array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {m.shape}")
    return m


def dag(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def fro(a) -> float:
    return float(np.linalg.norm(a))


def is_hermitian(m, tol: float = STRUCT_TOL) -> bool:
    m = as_matrix(m)
    return fro(m - dag(m)) <= tol


def is_unitary(m, tol: float = STRUCT_TOL) -> bool:
    m = as_matrix(m)
    return fro(dag(m) @ m - np.eye(m.shape[0])) <= tol


def _require_hermitian(h, tol: float = INPUT_TOL) -> np.ndarray:
    h = as_matrix(h)
    err = fro(h - dag(h))
    if err > tol * max(1.0, fro(h)):
        raise NonHermitianInput(f"matrix is not Hermitian (|H - H^dag|_F = {err:.3e})")
    return (h + dag(h)) / 2


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dag(self.vectors)


def _phase_normalize(v: np.ndarray, tol: float) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v
    c = v[idx[0]]
    return v * (abs(c) / c)


def _canonical_subspace(block: np.ndarray, tol: float) -> np.ndarray:
    # Gram-Schmidt over projected unit vectors: the result depends only on the
    # subspace, not on the basis LAPACK happened to return.
    proj = block @ dag(block)
    k = block.shape[1]
    basis = []
    for j in range(proj.shape[0]):
        v = proj[:, j].copy()
        for b in basis:
            v -= b * np.vdot(b, v)
        n = np.linalg.norm(v)
        if n > 1e-6:
            basis.append(v / n)
        if len(basis) == k:
            break
    vecs = [_phase_normalize(b, tol) for b in basis]
    # descending, so unit vectors come out in natural order (I -> I)
    vecs.sort(key=lambda v: tuple(x for z in np.round(v, 9) for x in (z.real, z.imag)),
              reverse=True)
    return np.column_stack(vecs)


def herm_eig(h) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix with a reproducible basis.

    Eigenvalues are ascending. Each eigenvector is phase-normalized so its
    first nonzero component is real and positive. Degenerate eigenspaces get
    a canonical basis, in descending lexicographic order of components.

    Raises NonHermitianInput when ``h`` fails the Hermiticity check.
    """
    h = _require_hermitian(h)
    w, v = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))))
    gap_tol = 1e-9 * scale
    out = np.empty_like(v)
    i = 0
    n = len(w)
    while i < n:
        j = i + 1
        while j < n and w[j] - w[j - 1] <= gap_tol:
            j += 1
        if j - i == 1:
            out[:, i] = _phase_normalize(v[:, i], 1e-12)
        else:
            out[:, i:j] = _canonical_subspace(v[:, i:j], 1e-12)
            w[i:j] = np.mean(w[i:j])
        i = j
    return EigenDecomposition(w, out)


def expm_unitary(h, t: float) -> np.ndarray:
    """Return exp(-i h t) for Hermitian ``h``, computed spectrally."""
    h = _require_hermitian(h)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ dag(v)


class SpectralPropagator:
    """Caches the spectrum of a fixed Hermitian generator.

    Calling the propagator with a time returns exp(-i h t). ``block(t, d)``
    returns the top-left ``d x d`` block without building the full matrix,
    which is what the conditioned evolution needs for every measurement round.
    """

    def __init__(self, h):
        self.h = _require_hermitian(h)
        self.values, self.vectors = np.linalg.eigh(self.h)

    def __call__(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.values * t)) @ dag(self.vectors)

    def block(self, t: float, d: int) -> np.ndarray:
        top = self.vectors[:d, :]
        return (top * np.exp(-1j * self.values * t)) @ dag(top)


def kron(a, b, *more) -> np.ndarray:
    """Kronecker product of two or more matrices (left factor is the slow index)."""
    mats = [np.asarray(x, dtype=complex) for x in (a, b, *more)]
    return reduce(np.kron, mats)


def ket(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return v


def projector(vec) -> np.ndarray:
    v = ket(vec)
    return np.outer(v, np.conj(v))


def check_density(rho, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate a density matrix and return it as a complex array.

    Raises InvalidState if the matrix is not Hermitian, not unit-trace or
    has an eigenvalue below ``-tol``.
    """
    rho = as_matrix(rho)
    herm_err = fro(rho - dag(rho))
    if herm_err > tol:
        raise InvalidState(f"density matrix not Hermitian ({herm_err:.2e})")
    tr = np.trace(rho)
    if abs(tr - 1) > tol:
        raise InvalidState(f"density matrix trace {tr.real:.12f} != 1")
    lo = float(np.min(np.linalg.eigvalsh((rho + dag(rho)) / 2)))
    if lo < -tol:
        raise InvalidState(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def von_neumann_entropy(rho) -> float:
    """Entropy -Tr[rho log rho] in nats, with 0 log 0 = 0."""
    rho = check_density(rho)
    p = np.linalg.eigvalsh((rho + dag(rho)) / 2)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log(p)))


def fidelity_with(rho: np.ndarray, target: np.ndarray) -> float:
    """Population <t|rho|t> of a pure target."""
    return float(np.real(np.vdot(target, rho @ target)))


def populations(rho: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Diagonal of rho in the basis given by the columns of ``basis``."""
    return np.real(np.einsum("ik,ij,jk->k", np.conj(basis), rho, basis))
