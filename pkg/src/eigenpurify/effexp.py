"""Effective-Hamiltonian expansion of the conditioned evolution.

For H = H_0 + H_P with M_phi H_P M_phi = 0, the n-th power projected on the
heralded ancilla state satisfies M_phi H^n M_phi = H_eff^(n) M_phi, where
H_eff^(n) collects every ordered word in H_0, H_P with an even number of H_P.
Two independent routes compute it:

* direct:    H_eff^(n) = (H^n + (H_0 - H_P)^n) / 2
* recursion: H_eff^(n) = H_eff^(n-1) (H_0 - H_P) + H^(n-1) H_P

and the expansion object keeps both so callers can cross-check them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .kraus import povm_step
from .linalg import as_matrix, dag, fro, kron
from .qops import SIGMA_A, SIGMA_A_DAG, AncillaSpec

MAX_ORDER = 8


@dataclass(frozen=True)
class EffectiveExpansion:
    order: int
    h_eff: np.ndarray
    v: np.ndarray
    w: np.ndarray
    d_q: np.ndarray
    offdiag_norm: float
    path_mismatch: float
    projection_mismatch: float

    def beta(self, basis: np.ndarray) -> np.ndarray:
        """Matrix elements <Psi_l| D_Q |Psi_k> in the given eigenbasis."""
        return dag(basis) @ self.d_q @ basis

    def annihilation(self, target) -> float:
        return float(np.linalg.norm(self.d_q @ np.asarray(target, dtype=complex)))


def _recursive_heff(h0: np.ndarray, h_p: np.ndarray, n: int) -> np.ndarray:
    h = h0 + h_p
    h_tilde = h0 - h_p
    heff = h0.copy()
    h_pow = np.eye(h.shape[0], dtype=complex)
    for _ in range(2, n + 1):
        h_pow = h_pow @ h
        heff = heff @ h_tilde + h_pow @ h_p
    return heff


def eff_order(h0, h_p, phi: AncillaSpec | None, n: int) -> EffectiveExpansion:
    """Order-``n`` effective Hamiltonian and its conditional blocks.

    ``h0`` must be block diagonal in the ancilla (H_S x I + H_A); the system
    Hamiltonian is read off as its |phi> block, which is exact because
    H_A |phi> = 0 in the adapted basis.

    Mismatches are reported relative to max(1, |H|_F^n).
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    h0 = as_matrix(h0)
    h_p = as_matrix(h_p)
    if h0.shape != h_p.shape or h0.shape[0] % 2:
        raise DimensionMismatch("H_0 and H_P must share an even joint dimension")
    d = h0.shape[0] // 2
    h = h0 + h_p
    direct = (np.linalg.matrix_power(h, n) + np.linalg.matrix_power(h0 - h_p, n)) / 2
    recursive = _recursive_heff(h0, h_p, n)
    scale = max(1.0, fro(h) ** n)

    m_phi = np.zeros_like(h)
    m_phi[:d, :d] = np.eye(d)
    projected = m_phi @ np.linalg.matrix_power(h, n) @ m_phi
    proj_err = fro(projected - direct @ m_phi) / scale

    h_s = h0[:d, :d]
    v = direct[:d, :d]
    return EffectiveExpansion(
        order=n,
        h_eff=direct,
        v=v,
        w=direct[d:, d:],
        d_q=v - np.linalg.matrix_power(h_s, n),
        offdiag_norm=max(fro(direct[:d, d:]), fro(direct[d:, :d])) / scale,
        path_mismatch=fro(direct - recursive) / scale,
        projection_mismatch=proj_err,
    )


def _joint(h_s, q, g_a, omega_a):
    h_s = as_matrix(h_s)
    q = as_matrix(q)
    d = h_s.shape[0]
    h0 = kron(np.eye(2), h_s) + kron(np.diag([0.0, omega_a]), np.eye(d))
    h_p = g_a * (kron(SIGMA_A_DAG, q) + kron(SIGMA_A, dag(q)))
    return h0, h_p


@dataclass
class V3Report:
    deviation: float
    passed: bool


def v3_closed_form_check(h_s, q, g_a: float, omega_a: float, tol: float = 1e-9) -> V3Report:
    """Compare the third-order |phi> block against its closed form

        H_S^3 + g^2 (H_S Q^dag Q + omega_a Q^dag Q + Q^dag Q H_S + Q^dag H_S Q)
    """
    h0, h_p = _joint(h_s, q, g_a, omega_a)
    h_s = as_matrix(h_s)
    q = as_matrix(q)
    qq = dag(q) @ q
    closed = np.linalg.matrix_power(h_s, 3) + g_a**2 * (h_s @ qq + omega_a * qq + qq @ h_s + dag(q) @ h_s @ q)
    dev = float(np.max(np.abs(eff_order(h0, h_p, None, 3).v - closed)))
    return V3Report(dev, dev <= tol)


@dataclass
class ChiReport:
    chi: float
    in_bounds: bool
    target_exact: bool | None


def chi_identity_check(rho, c, target=None) -> ChiReport:
    """chi = Tr[C rho C^dag] - 1 must lie in [-1, 0].

    When ``target`` is given, chi is also evaluated on |t><t| where it must
    vanish to 1e-12.
    """
    rho = as_matrix(rho)
    c = as_matrix(c)
    chi = float(np.real(np.trace(c @ rho @ dag(c)))) - 1.0
    ok = -1 - 1e-10 <= chi <= 1e-10
    exact = None
    if target is not None:
        t = np.asarray(target, dtype=complex)
        chi_t = povm_step(np.outer(t, np.conj(t)), c).p_phi - 1.0
        exact = abs(chi_t) <= 1e-12
    return ChiReport(chi, ok, exact)
