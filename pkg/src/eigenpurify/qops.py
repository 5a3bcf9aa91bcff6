"""Purification operators and the Hamiltonians built from them.

Joint ancilla-system operators put the ancilla on the LEFT of every tensor
product, and the ancilla is always written in the basis adapted to its
initial state: index 0 is |phi>, index 1 is |phi_perp>. In that basis

    sigma_a     = |phi><phi_perp| = [[0, 1], [0, 0]]
    sigma_a^dag = |phi_perp><phi| = [[0, 0], [1, 0]]
    H_A         = omega_a sigma_a^dag sigma_a = diag(0, omega_a)

so the heralded outcome is always the top-left system block of a joint
operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, NonOrthonormalBasis, ZeroCoefficient
from .linalg import as_matrix, dag, fro, is_hermitian, kron

SIGMA_A = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_A_DAG = SIGMA_A.T.copy()
M_PHI = np.diag([1.0, 0.0]).astype(complex)
M_PERP = np.diag([0.0, 1.0]).astype(complex)

EXCITED = np.array([1, 0], dtype=complex)
GROUND = np.array([0, 1], dtype=complex)


@dataclass(frozen=True)
class AncillaSpec:
    """Initial ancilla state and its bare frequency.

    ``phi`` is written in the physical (|e>, |g>) basis and is only used to
    report what the adapted basis means; the simulations never need it.
    """

    phi: np.ndarray = field(default_factory=lambda: EXCITED.copy())
    omega_a: float = 0.0

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex).reshape(-1)
        if phi.shape != (2,):
            raise InvalidSpec("ancilla state must have two components")
        if abs(np.linalg.norm(phi) - 1) > 1e-12:
            raise InvalidSpec(f"ancilla state not normalized (|phi| = {np.linalg.norm(phi)})")
        object.__setattr__(self, "phi", phi)

    @property
    def phi_perp(self) -> np.ndarray:
        a, b = self.phi
        return np.array([-np.conj(b), np.conj(a)])

    @property
    def basis(self) -> np.ndarray:
        """Columns |phi>, |phi_perp> in the physical basis."""
        return np.column_stack([self.phi, self.phi_perp])

    def h_a(self) -> np.ndarray:
        return self.omega_a * (SIGMA_A_DAG @ SIGMA_A)


@dataclass(frozen=True)
class PurificationSpec:
    q: np.ndarray
    target: np.ndarray
    lam: float
    g_a: float
    ancilla: AncillaSpec = field(default_factory=AncillaSpec)

    def __post_init__(self):
        q = as_matrix(self.q)
        t = np.asarray(self.target, dtype=complex).reshape(-1)
        if t.shape[0] != q.shape[0]:
            raise DimensionMismatch(f"target has dim {t.shape[0]}, Q has dim {q.shape[0]}")
        if abs(np.linalg.norm(t) - 1) > 1e-10:
            raise InvalidSpec("target must be a unit vector")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "target", t)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "g_a", float(self.g_a))

    @property
    def dim(self) -> int:
        return self.q.shape[0]


def _check_basis(vectors: Sequence, tol: float = 1e-10) -> np.ndarray:
    b = np.column_stack([np.asarray(v, dtype=complex).reshape(-1) for v in vectors])
    gram = dag(b) @ b
    err = fro(gram - np.eye(b.shape[1]))
    if err > tol:
        raise NonOrthonormalBasis(f"basis vectors are not orthonormal (Gram error {err:.2e})")
    return b


def _check_coeffs(coeffs, n: int) -> np.ndarray:
    a = np.asarray(coeffs, dtype=complex).reshape(-1)
    if a.shape[0] != n:
        raise DimensionMismatch(f"expected {n} coefficients, got {a.shape[0]}")
    if np.any(a == 0):
        raise ZeroCoefficient("purification coefficients must be nonzero")
    return a


def q_transitions_to_target(target, others: Sequence, coeffs) -> np.ndarray:
    """Q = sum_k a_k |target><psi_k|: every unwanted state feeds the target."""
    b = _check_basis([target, *others])
    a = _check_coeffs(coeffs, len(others))
    t = b[:, 0]
    return sum(a[k] * np.outer(t, np.conj(b[:, k + 1])) for k in range(len(others)))


def q_ladder(ordered_others: Sequence, coeffs) -> np.ndarray:
    """Q = sum_k a_k |psi_k><psi_{k+1}| along an ordering of the unwanted states.

    Needs ``len(ordered_others) - 1`` coefficients, one per neighbouring pair.
    """
    b = _check_basis(ordered_others)
    n = b.shape[1]
    if n < 2:
        raise DimensionMismatch("a ladder needs at least two states")
    a = _check_coeffs(coeffs, n - 1)
    return sum(a[k] * np.outer(b[:, k], np.conj(b[:, k + 1])) for k in range(n - 1))


def q_self_projectors(others: Sequence, coeffs=None) -> np.ndarray:
    """Q = sum_k a_k |psi_k><psi_k|. Unit weights give I - |target><target|."""
    b = _check_basis(others)
    a = _check_coeffs(np.ones(b.shape[1]) if coeffs is None else coeffs, b.shape[1])
    return (b * a) @ dag(b)


@dataclass
class ValidationReport:
    annihilation: float
    eigen_residual: float | None
    q_norm: float
    degenerate: bool
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_purification(spec: PurificationSpec, h_s=None, tol: float = 1e-10) -> ValidationReport:
    """Check Q|target> = 0 and, when H_S is given, H_S|target> = lam |target>."""
    q_norm = fro(spec.q)
    ann = float(np.linalg.norm(spec.q @ spec.target))
    failures = []
    if ann > tol * max(1.0, q_norm):
        failures.append(f"Q does not annihilate the target (|Q t| = {ann:.3e})")
    eig_res = None
    if h_s is not None:
        h_s = as_matrix(h_s)
        if h_s.shape != spec.q.shape:
            failures.append(f"H_S shape {h_s.shape} does not match Q shape {spec.q.shape}")
        else:
            eig_res = float(np.linalg.norm(h_s @ spec.target - spec.lam * spec.target))
            if eig_res > tol * max(1.0, fro(h_s)):
                failures.append(f"target is not an eigenvector with eigenvalue {spec.lam} ({eig_res:.3e})")
    return ValidationReport(ann, eig_res, q_norm, q_norm == 0.0, failures)


def assemble_h_p(spec: PurificationSpec) -> np.ndarray:
    """g_a (sigma_a^dag x Q + sigma_a x Q^dag) on ancilla x system.

    In block form over (|phi>, |phi_perp>) this is [[0, g Q^dag], [g Q, 0]].
    """
    report = validate_purification(spec)
    if not report.passed:
        raise InvalidSpec("; ".join(report.failures))
    q = spec.q
    return spec.g_a * (kron(SIGMA_A_DAG, q) + kron(SIGMA_A, dag(q)))


def assemble_full_h(h_s, spec: PurificationSpec) -> np.ndarray:
    """H = I_A x H_S + H_A x I_S + H_P."""
    h_s = as_matrix(h_s)
    if h_s.shape != spec.q.shape:
        raise DimensionMismatch(f"H_S shape {h_s.shape} does not match Q shape {spec.q.shape}")
    if not is_hermitian(h_s, 1e-8):
        raise InvalidSpec("H_S must be Hermitian")
    d = spec.dim
    return kron(np.eye(2), h_s) + kron(spec.ancilla.h_a(), np.eye(d)) + assemble_h_p(spec)


def ancilla_parity(d: int) -> np.ndarray:
    return kron(np.diag([1.0, -1.0]), np.eye(d))


def phi_block(joint: np.ndarray, d: int) -> np.ndarray:
    """<phi| X |phi> as a system operator."""
    return joint[:d, :d]


def perp_block(joint: np.ndarray, d: int) -> np.ndarray:
    return joint[d:, d:]
