"""Kraus operators of the heralded ancilla measurement and the induced POVM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, VanishingProbability
from .linalg import SpectralPropagator, _require_hermitian, as_matrix, dag, fro
from .qops import AncillaSpec, PurificationSpec, validate_purification

P_MIN = 1e-12


@dataclass(frozen=True)
class KrausPair:
    """Blocks of exp(-i H_P tau) in the (|phi>, |phi_perp>) ancilla basis.

    ``c`` = <phi|U|phi> (heralded success) and ``s`` = <phi|U|phi_perp>. The
    failure operator <phi_perp|U|phi> equals ``-s^dag``.
    """

    c: np.ndarray
    s: np.ndarray
    tau: float
    g_a: float

    @property
    def failure(self) -> np.ndarray:
        return -dag(self.s)

    def completeness_error(self) -> float:
        d = self.c.shape[0]
        return fro(dag(self.c) @ self.c + self.s @ dag(self.s) - np.eye(d))


def kraus_from_q(spec: PurificationSpec, tau: float) -> KrausPair:
    """Evaluate the conditioned blocks of exp(-i H_P tau) to all orders.

    With x = g_a tau sqrt(Q^dag Q):
        C = cos(x),   S = -i sin(x) / sqrt(Q^dag Q) Q^dag
    both evaluated on the spectrum of Q^dag Q, so the zero eigenvalue is
    handled by the sinc limit instead of a division.
    """
    if tau < 0:
        raise InvalidSpec("tau must be non-negative")
    report = validate_purification(spec)
    if not report.passed:
        raise InvalidSpec("; ".join(report.failures))
    q = spec.q
    lam, v = np.linalg.eigh(dag(q) @ q)
    root = np.sqrt(np.clip(lam, 0.0, None))
    x = spec.g_a * tau * root
    cos = (v * np.cos(x)) @ dag(v)
    # sin(g tau r) / r = g tau sinc(g tau r / pi) with numpy's normalized sinc
    sinc = spec.g_a * tau * np.sinc(x / np.pi)
    s = -1j * ((v * sinc) @ dag(v)) @ dag(q)
    return KrausPair(cos, s, float(tau), spec.g_a)


def kraus_from_full_h(h_full, ancilla: AncillaSpec | None, tau: float) -> np.ndarray:
    """<phi| exp(-i H tau) |phi> for a joint Hamiltonian on ancilla x system.

    ``ancilla`` is accepted for interface symmetry; the adapted basis puts
    |phi> first, so the block is always the top-left one.
    """
    h_full = as_matrix(h_full)
    n = h_full.shape[0]
    if n % 2:
        raise DimensionMismatch("joint Hamiltonian must have even dimension")
    return SpectralPropagator(h_full).block(tau, n // 2)


@dataclass(frozen=True)
class MeasurementOutcome:
    rho_after: np.ndarray
    p_phi: float


def povm_step(rho: np.ndarray, c: np.ndarray, p_min: float = P_MIN) -> MeasurementOutcome:
    """Apply the heralded POVM rho -> C rho C^dag / Tr[C rho C^dag]."""
    unnorm = c @ rho @ dag(c)
    p = float(np.real(np.trace(unnorm)))
    if p < p_min:
        raise VanishingProbability(p, p_min)
    out = unnorm / p
    return MeasurementOutcome((out + dag(out)) / 2, p)


@dataclass(frozen=True)
class KrausSpectrum:
    eigvals: np.ndarray
    eigvecs: np.ndarray
    fidelity: float
    residual: float
    weighted_residual: float
    p_phi: float
    decomposition_error: float

    @property
    def max_eig_sq(self) -> float:
        return float(np.max(self.eigvals**2))

    def protected(self, tol: float = 1e-9) -> np.ndarray:
        """Indices of non-target eigenvectors with eps_k^2 = 1 (not filtered this round)."""
        return np.flatnonzero(np.abs(self.eigvals[1:] ** 2 - 1) <= tol) + 1


def kraus_spectrum(c, rho, target) -> KrausSpectrum:
    """Split a Hermitian Kraus operator into the target and the rest.

    C is diagonalized on the orthogonal complement of the target, so the
    target always appears as eigenvector 0 with eigenvalue 1 even when that
    eigenvalue is degenerate. The returned spectrum records

        P_phi = F + sum' eps_k^2 <psi_k|rho|psi_k>

    together with the deviation from the directly computed Tr[C rho C^dag].
    """
    c = _require_hermitian(c)
    t = np.asarray(target, dtype=complex).reshape(-1)
    if fro(c @ t - t) > 1e-9:
        raise InvalidSpec("Kraus operator does not leave the target invariant")
    d = c.shape[0]
    # orthonormal complement of the target from the full QR of [t | I]
    qmat, _ = np.linalg.qr(np.column_stack([t, np.eye(d)]))
    comp = qmat[:, 1:d]
    comp = comp - np.outer(t, np.conj(t) @ comp)
    comp, _ = np.linalg.qr(comp)
    w, u = np.linalg.eigh(dag(comp) @ c @ comp)
    vecs = np.column_stack([t, comp @ u])
    vals = np.concatenate([[1.0], w])
    pops = np.real(np.einsum("ik,ij,jk->k", np.conj(vecs), rho, vecs))
    fid = float(pops[0])
    weighted = float(np.sum(vals[1:] ** 2 * pops[1:]))
    direct = float(np.real(np.trace(c @ rho @ dag(c))))
    return KrausSpectrum(vals, vecs, fid, float(np.sum(pops[1:])), weighted, direct,
                         abs(fid + weighted - direct))
