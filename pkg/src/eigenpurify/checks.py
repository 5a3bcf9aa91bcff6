"""Cross-module invariant suites run by ``eigenpurify validate``.

Each check returns a :class:`CheckResult` holding the measured worst-case
value and the tolerance it is held to. ``tamper=True`` injects an
odd-in-H_P term into the purification Hamiltonian (a phi-block piece), so a
correct suite must report failures; this is the mutation check for the
validator itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .effexp import MAX_ORDER, chi_identity_check, eff_order, v3_closed_form_check
from .kraus import kraus_from_q, kraus_spectrum
from .linalg import SpectralPropagator, dag, fro, is_unitary, kron, maximally_mixed
from .models import bell_xx_model, ghz_ising_model, stirap_model
from .protocol import ProtocolConfig, run_ensemble, run_trajectory
from .qops import M_PHI, ancilla_parity, assemble_h_p, validate_purification

TAMPER_STRENGTH = 0.05


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float
    passed: bool

    def row(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name:<46s} {self.value:11.3e}  (tol {self.tol:.2g})"


def _le(name, value, tol):
    value = float(value)
    return CheckResult(name, value, tol, bool(value <= tol))


def presets():
    out = {"bell_xx": bell_xx_model()}
    for lab in ("psi+", "phi-", "phi+"):
        out[f"bell_xx[{lab}]"] = bell_xx_model(target_label=lab)
    out["ghz_ising"] = ghz_ising_model()
    out["stirap"] = stirap_model()
    return out


def purification_hamiltonian(model, tamper: bool = False) -> np.ndarray:
    spec = model.purification
    h_p = assemble_h_p(spec)
    if tamper:
        # breaks H_P -> -H_P symmetry while still annihilating the target
        q = spec.q
        h_p = h_p + TAMPER_STRENGTH * spec.g_a * kron(M_PHI, dag(q) @ q)
    return h_p


def _bare(model) -> np.ndarray:
    d = model.dim
    return kron(np.eye(2), model.h_s) + kron(model.purification.ancilla.h_a(), np.eye(d))


def structural_checks(tamper: bool = False) -> list[CheckResult]:
    out = []
    rng = np.random.default_rng(20240601)
    ann = herm = anti = blk = v3 = 0.0
    unit = sign = off = dq = paths = kraus_eq = compl = 0.0
    for name, model in presets().items():
        spec = model.purification
        d = model.dim
        ann = max(ann, validate_purification(spec, model.h_s).annihilation)
        h_p = purification_hamiltonian(model, tamper)
        herm = max(herm, fro(h_p - dag(h_p)))
        anti = max(anti, fro(h_p @ ancilla_parity(d) + ancilla_parity(d) @ h_p))
        blk = max(blk, fro(h_p[:d, :d]))
        h0 = _bare(model)
        prop = SpectralPropagator(h0 + h_p)
        for t in rng.uniform(0.1, 20.0, 3):
            if not is_unitary(prop(t), 1e-10):
                unit = max(unit, fro(dag(prop(t)) @ prop(t) - np.eye(2 * d)))
        for n in range(1, MAX_ORDER + 1):
            e = eff_order(h0, h_p, spec.ancilla, n)
            flipped = eff_order(h0, -h_p, spec.ancilla, n)
            scale = max(1.0, fro(h0 + h_p) ** n)
            sign = max(sign, fro(e.h_eff - flipped.h_eff) / scale)
            off = max(off, e.offdiag_norm)
            dq = max(dq, e.annihilation(spec.target) / scale)
            paths = max(paths, e.path_mismatch, e.projection_mismatch)
        v3 = max(v3, v3_closed_form_check(model.h_s, spec.q, spec.g_a, spec.ancilla.omega_a).deviation)
        hp_prop = SpectralPropagator(h_p)
        for tau in rng.uniform(0.05, 15.0, 4):
            pair = kraus_from_q(spec, tau)
            u = hp_prop(tau)
            kraus_eq = max(kraus_eq, fro(pair.c - u[:d, :d]), fro(pair.s - u[:d, d:]))
            compl = max(compl, pair.completeness_error())
    out += [
        _le("Q annihilates the target (all presets)", ann, 1e-10),
        _le("H_P Hermitian", herm, 1e-12),
        _le("H_P anticommutes with ancilla parity", anti, 1e-12),
        _le("phi block of H_P vanishes", blk, 1e-12),
        _le("joint propagator unitary", unit, 1e-10),
        _le("H_eff even in H_P (n <= 8)", sign, 1e-10),
        _le("H_eff block diagonal (n <= 8)", off, 1e-10),
        _le("D_Q annihilates the target (n <= 8)", dq, 1e-9),
        _le("direct vs recursive H_eff (n <= 8)", paths, 1e-9),
        _le("V3 closed form", v3, 1e-9),
        _le("Kraus pair vs exp(-i H_P tau) blocks", kraus_eq, 1e-10),
        _le("Kraus completeness C^dag C + S S^dag = I", compl, 1e-9),
    ]
    return out


def dynamics_checks() -> list[CheckResult]:
    rng = np.random.default_rng(7)
    runs = [
        (bell_xx_model(), 2.0, 30),
        (ghz_ising_model(), 10.0, 10),
        (bell_xx_model(target_label="phi+"), 2.0, 30),
        (stirap_model(), 0.3, 15),
    ]
    prod = mono = lower = 0.0
    for model, tau0, rounds in runs:
        for idx in range(4):
            log = run_trajectory(ProtocolConfig(model, rounds, tau0, seed=11, steady_k=None), idx)
            prod = max(prod, float(np.max(log.product_errors())))
            fids = [log.initial_fidelity] + [r.fidelity for r in log.rounds]
            mono = max(mono, float(np.max(-np.diff(fids))))
            lower = max(lower, log.initial_fidelity - log.success_prob)
    decomp = eps = chi_bad = 0.0
    for model in presets().values():
        spec = model.purification
        for tau in rng.uniform(0.1, 12.0, 3):
            c = kraus_from_q(spec, tau).c
            a = rng.normal(size=(model.dim,) * 2) + 1j * rng.normal(size=(model.dim,) * 2)
            rho = a @ dag(a)
            rho /= np.trace(rho).real
            ks = kraus_spectrum(c, rho, model.target)
            decomp = max(decomp, ks.decomposition_error)
            eps = max(eps, ks.max_eig_sq - 1.0)
            for op in (c, model.conditioned(tau)):
                chi = chi_identity_check(rho, op)
                chi_bad = max(chi_bad, 0.0 if chi.in_bounds else 1.0)
            chi_bad = max(chi_bad, 0.0 if chi_identity_check(rho, c, model.target).target_exact else 1.0)
    ghz = ghz_ising_model()
    c_ghz = ghz.conditioned(np.pi / (2 * ghz.purification.g_a))
    chi_ghz = abs(chi_identity_check(maximally_mixed(8), c_ghz).chi + 7 / 8)
    return [
        _le("conserved product F_m P_s = F_0", prod, 1e-9),
        _le("fidelity monotone per round", mono, 1e-12),
        _le("P_s lower bound F_0", lower, 1e-10),
        _le("P_phi spectral decomposition", decomp, 1e-10),
        _le("Kraus eigenvalues eps^2 <= 1", max(eps, 0.0), 1e-10),
        _le("chi in [-1, 0], zero on the target", chi_bad, 0.0),
        _le("GHZ chi = -7/8 at g tau = pi/2", chi_ghz, 1e-12),
    ]


def robustness_check(n_traj: int = 100, workers=None) -> CheckResult:
    stats = run_ensemble(ProtocolConfig(bell_xx_model(), 200, 2.0, seed=2024, steady_k=None),
                         n_traj, workers=workers)
    worst = float(np.min(stats.final("fidelity")))
    return CheckResult(f"Bell robustness: min F over {n_traj} seeds >= 0.95", worst, 0.95,
                       bool(worst >= 0.95))


def monte_carlo_check(n_traj: int = 10_000, workers=None) -> CheckResult:
    model = ghz_ising_model()
    # same seed and indices: identical interval sequences in both modes
    cond = run_ensemble(ProtocolConfig(model, 3, 10.0, seed=99, steady_k=None), n_traj,
                        workers=workers)
    p_s = float(cond.success["mean"][-1])
    mc = run_ensemble(ProtocolConfig(model, 3, 10.0, mode="monte_carlo", seed=99, steady_k=None),
                      n_traj, workers=workers)
    freq = 1.0 - mc.n_failed / mc.n_traj
    se = np.sqrt(p_s * (1 - p_s) / n_traj)
    z = abs(freq - p_s) / se
    return CheckResult("Monte-Carlo success frequency (z-score)", z, 3.0, bool(z <= 3.0))


def run_suite(level: str = "fast", tamper: bool = False, workers=None) -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError(f"unknown level {level!r}")
    results = structural_checks(tamper) + dynamics_checks()
    if level == "full":
        results.append(robustness_check(workers=workers))
        results.append(monte_carlo_check(workers=workers))
    return results
