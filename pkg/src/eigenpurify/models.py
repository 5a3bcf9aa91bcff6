"""Preset physical models with analytic eigenstructure.

Qubit convention: |0> is the excited state and |1> the ground state, so
sigma^+ = |0><1| and the bare energy term omega sigma^+ sigma^- weights |0>.
This is the convention under which the Bell-basis eigenvectors below
diagonalize the XX Hamiltonian with the stated eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import InvalidSchedule, InvalidState, NoConvergence, UnknownTarget
from .linalg import SpectralPropagator, as_matrix, check_density, dag, fro, kron, maximally_mixed
from .qops import (
    EXCITED,
    GROUND,
    AncillaSpec,
    PurificationSpec,
    assemble_full_h,
    assemble_h_p,
    q_self_projectors,
)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)

PICTURES = ("interaction", "schroedinger", "rotating")


def basis_state(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def on_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    mats = [I2] * n
    mats[site] = op
    return kron(*mats) if n > 1 else op.copy()


@dataclass(frozen=True)
class PulseSchedule:
    """Counter-intuitive STIRAP pulse pair with a hyperbolic-sine ramp.

    f(t) = sinh(beta t / t_c) with beta = asinh(1), so f(0) = 0 and f(t_c) = 1.
    Omega_12 = omega0 f(t) and Omega_23 = omega0 (1 - f(t)).
    """

    omega0: float = 1.0
    t_c: float = 15.0
    beta: float = float(np.arcsinh(1.0))

    def __post_init__(self):
        if not (self.omega0 > 0 and self.t_c > 0 and self.beta > 0):
            raise InvalidSchedule("omega0, t_c and beta must be positive")
        if abs(self.f(0.0)) > 1e-12 or abs(self.f(self.t_c) - 1.0) > 1e-12:
            raise InvalidSchedule("shape function violates f(0) = 0, f(t_c) = 1")

    def f(self, t):
        return np.sinh(self.beta * np.asarray(t, dtype=float) / self.t_c)

    def omega12(self, t):
        return self.omega0 * self.f(t)

    def omega23(self, t):
        return self.omega0 * (1.0 - self.f(t))

    def hamiltonian(self, t):
        """H_1(t) = Omega_12 sigma12^x + Omega_23 sigma23^x; vectorized over t."""
        t = np.asarray(t, dtype=float)
        a = self.omega12(t)[..., None, None]
        b = self.omega23(t)[..., None, None]
        return a * SIGMA12_X + b * SIGMA23_X

    def dark_state(self, t) -> np.ndarray:
        v = np.array([self.omega23(t), 0.0, -self.omega12(t)], dtype=complex)
        return v / np.linalg.norm(v)


E1, E2, E3 = (np.eye(3, dtype=complex)[:, k] for k in range(3))
SIGMA12_X = np.outer(E1, E2) + np.outer(E2, E1)
SIGMA23_X = np.outer(E2, E3) + np.outer(E3, E2)
SIGMA12_MINUS = np.outer(E1, E2)


@dataclass(frozen=True)
class ModelSpec:
    """A preset with everything a protocol run needs.

    ``h_joint`` generates the free joint evolution between measurements: the
    full ancilla-plus-system Hamiltonian in the Schrodinger or rotating
    picture, or H_P alone in the interaction picture.
    """

    name: str
    h_s: np.ndarray
    purification: PurificationSpec
    picture: str
    unit: str
    labels: tuple
    basis: np.ndarray
    energies: np.ndarray
    h_joint: np.ndarray
    named_states: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    schedule: PulseSchedule | None = None
    mode: str | None = None
    default_initial: str = "maximally_mixed"

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]

    @property
    def target(self) -> np.ndarray:
        return self.purification.target

    @property
    def target_label(self) -> str:
        overlaps = np.abs(dag(self.basis) @ self.target)
        return self.labels[int(np.argmax(overlaps))]

    @cached_property
    def propagator(self) -> SpectralPropagator:
        return SpectralPropagator(self.h_joint)

    def conditioned(self, tau: float) -> np.ndarray:
        """System operator <phi| exp(-i h_joint tau) |phi> for one round."""
        return self.propagator.block(tau, self.dim)

    def state(self, name: str) -> np.ndarray:
        if name in self.named_states:
            return self.named_states[name]
        if name in self.labels:
            return self.basis[:, self.labels.index(name)]
        raise InvalidState(f"unknown state label {name!r} for model {self.name}")

    def initial_state(self, descriptor=None) -> np.ndarray:
        """Density matrix for 'maximally_mixed', a state label, or an explicit matrix."""
        if descriptor is None:
            descriptor = self.default_initial
        if isinstance(descriptor, str):
            if descriptor == "maximally_mixed":
                return maximally_mixed(self.dim)
            v = self.state(descriptor)
            return np.outer(v, np.conj(v))
        return check_density(descriptor)


BELL_LABELS = ("psi-", "psi+", "phi-", "phi+")
_BELL_ALIASES = {
    "psi_minus": "psi-", "psi_plus": "psi+", "phi_minus": "phi-", "phi_plus": "phi+",
    "Psi-": "psi-", "Psi+": "psi+", "Phi-": "phi-", "Phi+": "phi+",
}


def bell_eigenbasis(omega0: float, g_s: float):
    """Analytic eigenvectors (columns, in BELL_LABELS order), eigenvalues and xi_pm."""
    r = np.hypot(g_s, omega0)
    xi_m = np.sqrt(g_s**2 + (omega0 - r) ** 2)
    xi_p = np.sqrt(g_s**2 + (omega0 + r) ** 2)
    s2 = np.sqrt(2.0)
    psi_m = (basis_state("01") - basis_state("10")) / s2
    psi_p = (basis_state("01") + basis_state("10")) / s2
    phi_m = ((r - omega0) * basis_state("00") - g_s * basis_state("11")) / xi_m
    phi_p = ((r + omega0) * basis_state("00") + g_s * basis_state("11")) / xi_p
    vals = np.array([omega0 - g_s, omega0 + g_s, omega0 - r, omega0 + r])
    return np.column_stack([psi_m, psi_p, phi_m, phi_p]), vals, (xi_m, xi_p)


def bell_h_s(omega0: float, g_s: float) -> np.ndarray:
    s1p, s2p = on_site(SIGMA_PLUS, 0, 2), on_site(SIGMA_PLUS, 1, 2)
    return (omega0 * s1p @ dag(s1p) + omega0 * s2p @ dag(s2p)
            + g_s * kron(SIGMA_X, SIGMA_X))


def bell_xx_model(omega0: float = 1.0, g_s: float = 1.0, g_a: float = 0.2,
                  omega_a: float = -1.0, target_label: str = "psi-",
                  projector: bool = False) -> ModelSpec:
    """Two resonant qubits with XX coupling, heralded on the ancilla in |e>.

    The ancilla term is omega_a |phi_perp><phi_perp| = omega_a |g><g|, so
    ``omega_a = -omega0`` puts the ancilla excitation omega0 above its
    ground state (resonant with the qubits); that is the default.

    For the singlet target Q = sigma_1^+ + sigma_2^+; every other target, and
    the singlet when ``projector`` is set, uses the complement projector
    I - |Psi><Psi|.
    """
    label = _BELL_ALIASES.get(target_label, target_label)
    if label not in BELL_LABELS:
        raise UnknownTarget(target_label)
    if g_s <= 0 or g_a <= 0:
        raise ValueError("g_s and g_a must be positive")
    basis, vals, (xi_m, xi_p) = bell_eigenbasis(omega0, g_s)
    h_s = bell_h_s(omega0, g_s)
    k = BELL_LABELS.index(label)
    target = basis[:, k]
    if label == "psi-" and not projector:
        q = on_site(SIGMA_PLUS, 0, 2) + on_site(SIGMA_PLUS, 1, 2)
    else:
        q = q_self_projectors([basis[:, j] for j in range(4) if j != k])
    spec = PurificationSpec(q, target, vals[k], g_a, AncillaSpec(EXCITED, omega_a))
    named = {b: basis_state(b) for b in ("00", "01", "10", "11")}
    return ModelSpec(
        name="bell_xx", h_s=h_s, purification=spec, picture="schroedinger", unit="omega0",
        labels=BELL_LABELS, basis=basis, energies=vals, h_joint=assemble_full_h(h_s, spec),
        named_states=named,
        params=dict(omega0=omega0, g_s=g_s, g_a=g_a, omega_a=omega_a, target=label,
                    projector=projector, xi_minus=xi_m, xi_plus=xi_p),
    )


GHZ_LABELS = ("psi1+", "psi1-", "psi2+", "psi2-", "psi3+", "psi3-", "psi4+", "psi4-")
_GHZ_PAIRS = (("000", "111"), ("010", "101"), ("001", "100"), ("011", "110"))


def ghz_eigenbasis() -> np.ndarray:
    cols = []
    for a, b in _GHZ_PAIRS:
        for sign in (1, -1):
            cols.append((basis_state(a) + sign * basis_state(b)) / np.sqrt(2))
    return np.column_stack(cols)


def ghz_h_s(j: float) -> np.ndarray:
    z = [on_site(SIGMA_Z, k, 3) for k in range(3)]
    return j * (z[0] @ z[1] + z[1] @ z[2])


def ghz_ising_model(j: float = 1.0, g_a: float = 0.2, unwanted=None) -> ModelSpec:
    """Three-spin Ising chain targeting |GHZ> = |psi1+>, interaction picture.

    ``unwanted`` lists the labels that get a unit self-projector in Q; the
    default is all seven non-target states, i.e. Q = I - |GHZ><GHZ|.
    """
    if j <= 0 or g_a <= 0:
        raise ValueError("j and g_a must be positive")
    basis = ghz_eigenbasis()
    h_s = ghz_h_s(j)
    energies = np.real(np.einsum("ik,ij,jk->k", np.conj(basis), h_s, basis))
    if unwanted is None:
        unwanted = GHZ_LABELS[1:]
    unwanted = tuple(unwanted)
    for lab in unwanted:
        if lab not in GHZ_LABELS or lab == "psi1+":
            raise UnknownTarget(lab)
    q = q_self_projectors([basis[:, GHZ_LABELS.index(lab)] for lab in unwanted])
    spec = PurificationSpec(q, basis[:, 0], energies[0], g_a, AncillaSpec(GROUND, 0.0))
    named = {format(i, "03b"): basis_state(format(i, "03b")) for i in range(8)}
    return ModelSpec(
        name="ghz_ising", h_s=h_s, purification=spec, picture="interaction", unit="J",
        labels=GHZ_LABELS, basis=basis, energies=energies, h_joint=assemble_h_p(spec),
        named_states=named, params=dict(j=j, g_a=g_a, unwanted=list(unwanted)),
    )


STIRAP_LABELS = ("E0", "E-", "E+")


def stirap_q_eigenform() -> np.ndarray:
    """|E-><E+| - |E+><E-| + |E+><E+| - |E-><E-| written in the bare basis."""
    e_m = (E1 - E2) / np.sqrt(2)
    e_p = (E1 + E2) / np.sqrt(2)
    o = lambda a, b: np.outer(a, np.conj(b))  # noqa: E731
    return o(e_m, e_p) - o(e_p, e_m) + o(e_p, e_p) - o(e_m, e_m)


def stirap_model(omega0: float = 1.0, g_a: float = 10.0, schedule: PulseSchedule | None = None,
                 mode: str = "hybrid") -> ModelSpec:
    """Three-level cascade with STIRAP drives and a resonant purifying ancilla.

    The purification stage runs in the rotating frame with
    H = omega0 sigma12^x + g_a (sigma_a^+ sigma12^- + h.c.), ancilla in |g>,
    Q = sigma12^- = |e1><e2| and target |e3>.
    """
    if mode not in ("stirap", "purify", "hybrid"):
        raise ValueError(f"unknown STIRAP mode {mode!r}")
    if schedule is None:
        schedule = PulseSchedule(omega0=omega0)
    if not isinstance(schedule, PulseSchedule):
        raise InvalidSchedule("schedule must be a PulseSchedule")
    if abs(schedule.omega0 - omega0) > 1e-12:
        raise InvalidSchedule("schedule amplitude must equal the model omega0")
    h_s = omega0 * SIGMA12_X
    spec = PurificationSpec(SIGMA12_MINUS, E3, 0.0, g_a, AncillaSpec(GROUND, 0.0))
    basis = np.column_stack([E3, (E1 - E2) / np.sqrt(2), (E1 + E2) / np.sqrt(2)])
    return ModelSpec(
        name="stirap", h_s=h_s, purification=spec, picture="rotating", unit="Omega0",
        labels=STIRAP_LABELS, basis=basis, energies=np.array([0.0, -omega0, omega0]),
        h_joint=kron(I2, h_s) + assemble_h_p(spec),
        named_states={"e1": E1, "e2": E2, "e3": E3},
        params=dict(omega0=omega0, g_a=g_a, t_c=schedule.t_c, beta=schedule.beta),
        schedule=schedule, mode=mode, default_initial="e1",
    )


def _hamiltonian_stack(h_of_t: Callable, times: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(h_of_t(times), dtype=complex)
    except (TypeError, ValueError):
        out = None  # scalar-only callable
    if out is not None and out.ndim == 3:
        return out
    return np.stack([as_matrix(h_of_t(t)) for t in times])


def step_propagators(h_of_t: Callable, t0: float, t1: float, substeps: int) -> np.ndarray:
    """Midpoint exponentials exp(-i H(t_k + dt/2) dt) for each substep, shape (n, d, d)."""
    dt = (t1 - t0) / substeps
    mids = t0 + (np.arange(substeps) + 0.5) * dt
    hs = _hamiltonian_stack(h_of_t, mids)
    hs = (hs + np.conj(np.swapaxes(hs, -1, -2))) / 2
    w, v = np.linalg.eigh(hs)
    return (v * np.exp(-1j * w * dt)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _ordered_product(steps: np.ndarray) -> np.ndarray:
    # later steps multiply from the left; pairwise reduction keeps it O(log n) numpy calls
    while steps.shape[0] > 1:
        if steps.shape[0] % 2:
            eye = np.eye(steps.shape[1], dtype=complex)[None]
            steps = np.concatenate([steps, eye])
        steps = steps[1::2] @ steps[0::2]
    return steps[0]


def time_ordered_propagator(h_of_t: Callable, t0: float, t1: float, substeps: int = 2000,
                            tol: float = 1e-8, max_doublings: int = 12, rho=None):
    """Piecewise-constant midpoint propagator from t0 to t1, refined until converged.

    Substeps are doubled until the Frobenius change between successive
    refinements drops below ``tol``; the change is measured on the evolved
    ``rho`` when one is given and on the propagator otherwise.

    Returns ``(U, substeps_used)``. Raises NoConvergence after
    ``max_doublings`` failed refinements.
    """
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    n = int(substeps)
    prev = _ordered_product(step_propagators(h_of_t, t0, t1, n))
    for _ in range(max_doublings):
        n *= 2
        cur = _ordered_product(step_propagators(h_of_t, t0, t1, n))
        if rho is None:
            change = fro(cur - prev)
        else:
            change = fro(cur @ rho @ dag(cur) - prev @ rho @ dag(prev))
        if change < tol:
            return cur, n
        prev = cur
    raise NoConvergence(f"midpoint integration not converged after {max_doublings} doublings")


def evolve_time_dependent(h_of_t: Callable, rho, t0: float, t1: float, substeps: int = 2000,
                          tol: float = 1e-8, max_doublings: int = 12) -> np.ndarray:
    """Evolve a density matrix under a time-dependent Hamiltonian."""
    rho = check_density(rho)
    u, _ = time_ordered_propagator(h_of_t, t0, t1, substeps, tol, max_doublings, rho=rho)
    out = u @ rho @ dag(u)
    return (out + dag(out)) / 2


PRESETS = {
    "bell_xx": bell_xx_model,
    "ghz_ising": ghz_ising_model,
    "stirap": stirap_model,
}
