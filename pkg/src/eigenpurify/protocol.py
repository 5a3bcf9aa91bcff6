"""Repeated evolve-and-measure protocol, hybrid STIRAP strategies and ensembles."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import VanishingProbability
from .kraus import P_MIN
from .linalg import dag, fidelity_with, populations
from .models import ModelSpec, PulseSchedule, step_propagators, time_ordered_propagator

MASK64 = (1 << 64) - 1
WORKERS_ENV = "EIGENPURIFY_WORKERS"
FIRST_PASSAGE_LEVEL = 0.99


@dataclass(frozen=True)
class ProtocolConfig:
    model: ModelSpec
    rounds: int
    tau0: float
    jitter: str = "uniform"
    mode: str = "conditioned"
    seed: int = 0
    steady_eps: float = 1e-6
    steady_k: int | None = 5
    initial: object = None

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if self.jitter not in ("uniform", "none"):
            raise ValueError(f"unknown jitter rule {self.jitter!r}")
        if self.mode not in ("conditioned", "monte_carlo"):
            raise ValueError(f"unknown mode {self.mode!r}")


def interval_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream of measurement intervals for one trajectory.

    Philox is keyed by (seed, trajectory index), so trajectories are
    independent, reproducible on any platform and can be generated in any
    order.
    """
    return np.random.Generator(np.random.Philox(key=[seed & MASK64, index & MASK64]))


def outcome_stream(seed: int, index: int = 0) -> np.random.Generator:
    # same key, counter block offset by 2**192: disjoint from interval_stream
    return np.random.Generator(
        np.random.Philox(key=[seed & MASK64, index & MASK64], counter=[0, 0, 0, 1]))


def sample_interval(tau0: float, rng: np.random.Generator, jitter: str = "uniform") -> float:
    """Draw tau = tau0 + dt with dt uniform in the open interval (-tau0/2, tau0/2)."""
    if not tau0 > 0:
        raise ValueError("tau0 must be positive")
    if jitter == "none":
        return float(tau0)
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return float(tau0 * (0.5 + u))


@dataclass
class RoundRecord:
    index: int
    time: float
    tau: float
    p_phi: float
    success_prob: float
    fidelity_before: float
    fidelity: float
    populations: np.ndarray


@dataclass
class TrajectoryLog:
    index: int
    initial_fidelity: float
    initial_populations: np.ndarray
    rounds: list = field(default_factory=list)
    status: str = "completed"
    final_state: np.ndarray | None = None
    strategy: str | None = None
    timeline: tuple | None = None

    @property
    def fidelity(self) -> float:
        if self.timeline is not None:
            return float(self.timeline[1][-1])
        return self.rounds[-1].fidelity if self.rounds else self.initial_fidelity

    @property
    def success_prob(self) -> float:
        return self.rounds[-1].success_prob if self.rounds else 1.0

    @property
    def total_time(self) -> float:
        if self.timeline is not None:
            return float(self.timeline[0][-1])
        return self.rounds[-1].time if self.rounds else 0.0

    def product_errors(self) -> np.ndarray:
        """|F_m P_phi^(m) - F_(m-1)| for every purification round."""
        return np.array([abs(r.fidelity * r.p_phi - r.fidelity_before) for r in self.rounds])

    def first_passage(self, level: float = FIRST_PASSAGE_LEVEL) -> float | None:
        if self.timeline is not None:
            return first_passage(*self.timeline, level=level)
        times = [0.0] + [r.time for r in self.rounds]
        fids = [self.initial_fidelity] + [r.fidelity for r in self.rounds]
        return first_passage(np.array(times), np.array(fids), level=level)


def first_passage(times: np.ndarray, values: np.ndarray, level: float = FIRST_PASSAGE_LEVEL):
    """First time the piecewise-linear curve reaches ``level``, or None."""
    hit = np.flatnonzero(values >= level)
    if hit.size == 0:
        return None
    k = int(hit[0])
    if k == 0:
        return float(times[0])
    t0, t1, v0, v1 = times[k - 1], times[k], values[k - 1], values[k]
    if t1 == t0 or v1 == v0:
        return float(t1)
    return float(t0 + (level - v0) * (t1 - t0) / (v1 - v0))


def _measure(model: ModelSpec, rho: np.ndarray, tau: float, mode: str, outcomes):
    """One free joint evolution followed by the ancilla readout.

    Returns (rho_after, p_phi, succeeded).
    """
    c = model.conditioned(tau)
    unnorm = c @ rho @ dag(c)
    p = float(np.real(np.trace(unnorm)))
    if mode == "monte_carlo" and outcomes.random() >= p:
        return rho, p, False
    if p < P_MIN:
        raise VanishingProbability(p, P_MIN)
    out = unnorm / p
    return (out + dag(out)) / 2, p, True


def run_trajectory(config: ProtocolConfig, index: int = 0) -> TrajectoryLog:
    """Run the repeated measurement protocol on one trajectory.

    Conditioned mode keeps the heralded branch every round. Monte-Carlo mode
    samples the readout and stops with status "failed" on the orthogonal
    outcome. Either mode stops early with status "steady" once p_phi stays
    above 1 - steady_eps for steady_k consecutive rounds.
    """
    model = config.model
    target = model.target
    rho = model.initial_state(config.initial)
    f0 = fidelity_with(rho, target)
    log = TrajectoryLog(index, f0, populations(rho, model.basis))
    intervals = interval_stream(config.seed, index)
    outcomes = outcome_stream(config.seed, index)
    t = 0.0
    p_s = 1.0
    streak = 0
    f_prev = f0
    for m in range(1, config.rounds + 1):
        tau = sample_interval(config.tau0, intervals, config.jitter)
        try:
            rho, p, ok = _measure(model, rho, tau, config.mode, outcomes)
        except VanishingProbability:
            log.status = "failed"
            break
        t += tau
        if not ok:
            log.status = "failed"
            break
        p_s *= p
        f = fidelity_with(rho, target)
        log.rounds.append(RoundRecord(m, t, tau, p, p_s, f_prev, f, populations(rho, model.basis)))
        f_prev = f
        streak = streak + 1 if p >= 1 - config.steady_eps else 0
        if config.steady_k and streak >= config.steady_k:
            log.status = "steady"
            break
    log.final_state = rho
    return log


@lru_cache(maxsize=64)
def _stirap_segment(schedule: PulseSchedule, t0: float, t1: float, substeps: int = 256):
    """Cumulative propagators U(t0 + j dt, t0), j = 1..n, at the converged step count."""
    _, n = time_ordered_propagator(schedule.hamiltonian, t0, t1, substeps)
    steps = step_propagators(schedule.hamiltonian, t0, t1, n)
    cum = np.empty_like(steps)
    acc = np.eye(steps.shape[1], dtype=complex)
    for j in range(n):
        acc = steps[j] @ acc
        cum[j] = acc
    times = (np.arange(1, n + 1) / n) * (t1 - t0)
    return times, cum


def _stirap_stage(schedule, t0, t1, rho, target, clock, times, values):
    rel, cum = _stirap_segment(schedule, float(t0), float(t1))
    # <t|U rho U^dag|t> = a^dag rho a with a = U^dag |t>
    rows = np.conj(cum.transpose(0, 2, 1)) @ target
    pops = np.real(np.einsum("ni,ij,nj->n", np.conj(rows), rho, rows))
    times.extend(clock + rel)
    values.extend(pops)
    u = cum[-1]
    out = u @ rho @ dag(u)
    return (out + dag(out)) / 2, clock + (t1 - t0)


def run_hybrid_stirap(strategy: str, config: ProtocolConfig, index: int = 0) -> TrajectoryLog:
    """STIRAP alone or combined with heralded purification rounds.

    * ``pure``: the STIRAP ramp over [0, t_c].
    * ``hybrid1``: t_c split into ``rounds`` equal STIRAP segments, each
      followed by one purification round of random length.
    * ``hybrid2``: the full STIRAP ramp, then ``rounds`` purification rounds.

    The log's timeline holds the target population against elapsed time,
    STIRAP stretches sampled at every integration substep.
    """
    if strategy not in ("pure", "hybrid1", "hybrid2"):
        raise ValueError(f"unknown strategy {strategy!r}")
    model = config.model
    schedule = model.schedule
    if schedule is None:
        raise ValueError("hybrid strategies need a STIRAP model")
    target = model.target
    rho = model.initial_state(config.initial)
    f0 = fidelity_with(rho, target)
    log = TrajectoryLog(index, f0, populations(rho, model.basis), strategy=strategy)
    intervals = interval_stream(config.seed, index)
    outcomes = outcome_stream(config.seed, index)
    times, values = [0.0], [f0]
    clock = 0.0
    p_s = 1.0
    t_c = schedule.t_c

    def purify(rho, clock, p_s, m):
        tau = sample_interval(config.tau0, intervals, config.jitter)
        f_before = fidelity_with(rho, target)
        rho_new, p, ok = _measure(model, rho, tau, config.mode, outcomes)
        clock += tau
        times.append(clock)
        values.append(f_before)
        if not ok:
            return rho, clock, p_s, False
        p_s *= p
        f = fidelity_with(rho_new, target)
        times.append(clock)
        values.append(f)
        log.rounds.append(RoundRecord(m, clock, tau, p, p_s, f_before, f,
                                      populations(rho_new, model.basis)))
        return rho_new, clock, p_s, True

    try:
        if strategy == "pure":
            rho, clock = _stirap_stage(schedule, 0.0, t_c, rho, target, clock, times, values)
        elif strategy == "hybrid1":
            edges = np.linspace(0.0, t_c, config.rounds + 1)
            for m in range(config.rounds):
                rho, clock = _stirap_stage(schedule, edges[m], edges[m + 1], rho, target,
                                           clock, times, values)
                rho, clock, p_s, ok = purify(rho, clock, p_s, m + 1)
                if not ok:
                    log.status = "failed"
                    break
        else:
            rho, clock = _stirap_stage(schedule, 0.0, t_c, rho, target, clock, times, values)
            for m in range(config.rounds):
                rho, clock, p_s, ok = purify(rho, clock, p_s, m + 1)
                if not ok:
                    log.status = "failed"
                    break
    except VanishingProbability:
        log.status = "failed"
    log.final_state = rho
    log.timeline = (np.asarray(times), np.asarray(values))
    return log


@dataclass
class EnsembleStats:
    """Per-round statistics over trajectories, rebuilt from raw per-trajectory arrays.

    Rows are sorted by trajectory index before any statistic is taken, so
    the result does not depend on completion order. Trajectories that stop
    as "steady" are held at their last values; rounds after a failure are NaN.
    """

    indices: np.ndarray
    fidelity_raw: np.ndarray
    success_raw: np.ndarray
    populations_raw: np.ndarray
    tau_raw: np.ndarray
    p_phi_raw: np.ndarray
    time_raw: np.ndarray
    status: list
    first_passage_raw: np.ndarray
    final_fidelity_raw: np.ndarray

    @classmethod
    def from_logs(cls, logs, rounds: int) -> "EnsembleStats":
        logs = sorted(logs, key=lambda lg: lg.index)
        n = len(logs)
        d = len(logs[0].initial_populations)
        fid = np.full((n, rounds + 1), np.nan)
        suc = np.full((n, rounds + 1), np.nan)
        pops = np.full((n, rounds + 1, d), np.nan)
        tau = np.full((n, rounds + 1), np.nan)
        pph = np.full((n, rounds + 1), np.nan)
        tim = np.full((n, rounds + 1), np.nan)
        for i, lg in enumerate(logs):
            fid[i, 0], suc[i, 0], pops[i, 0] = lg.initial_fidelity, 1.0, lg.initial_populations
            tau[i, 0], pph[i, 0], tim[i, 0] = 0.0, 1.0, 0.0
            for r in lg.rounds:
                fid[i, r.index], suc[i, r.index], pops[i, r.index] = r.fidelity, r.success_prob, r.populations
                tau[i, r.index], pph[i, r.index], tim[i, r.index] = r.tau, r.p_phi, r.time
            last = len(lg.rounds)
            if lg.status == "steady" and last < rounds:
                fid[i, last + 1:] = fid[i, last]
                suc[i, last + 1:] = suc[i, last]
                pops[i, last + 1:] = pops[i, last]
        fp = np.array([np.nan if (x := lg.first_passage()) is None else x for lg in logs])
        return cls(np.array([lg.index for lg in logs]), fid, suc, pops, tau, pph, tim,
                   [lg.status for lg in logs], fp, np.array([lg.fidelity for lg in logs]))

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        order = np.argsort(np.concatenate([self.indices, other.indices]), kind="stable")
        cat = lambda a, b: np.concatenate([a, b])[order]  # noqa: E731
        status = [(self.status + other.status)[k] for k in order]
        return EnsembleStats(cat(self.indices, other.indices),
                             cat(self.fidelity_raw, other.fidelity_raw),
                             cat(self.success_raw, other.success_raw),
                             cat(self.populations_raw, other.populations_raw),
                             cat(self.tau_raw, other.tau_raw),
                             cat(self.p_phi_raw, other.p_phi_raw),
                             cat(self.time_raw, other.time_raw),
                             status, cat(self.first_passage_raw, other.first_passage_raw),
                             cat(self.final_fidelity_raw, other.final_fidelity_raw))

    @property
    def n_traj(self) -> int:
        return len(self.indices)

    @property
    def n_failed(self) -> int:
        return sum(s == "failed" for s in self.status)

    @staticmethod
    def _summary(a: np.ndarray) -> dict:
        # all-NaN columns (every trajectory failed by then) stay NaN
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return {
                "mean": np.nanmean(a, axis=0),
                "std": np.nanstd(a, axis=0),
                "min": np.nanmin(a, axis=0),
                "max": np.nanmax(a, axis=0),
                "q05": np.nanquantile(a, 0.05, axis=0),
                "q50": np.nanquantile(a, 0.50, axis=0),
                "q95": np.nanquantile(a, 0.95, axis=0),
            }

    @property
    def fidelity(self) -> dict:
        return self._summary(self.fidelity_raw)

    @property
    def success(self) -> dict:
        return self._summary(self.success_raw)

    @property
    def populations_mean(self) -> np.ndarray:
        return np.nanmean(self.populations_raw, axis=0)

    def final(self, which: str = "fidelity") -> np.ndarray:
        """Last recorded value per trajectory (for STIRAP runs, the end of the timeline)."""
        if which == "fidelity":
            return self.final_fidelity_raw.copy()
        raw = self.fidelity_raw if which == "fidelity" else self.success_raw
        out = np.empty(raw.shape[0])
        for i, row in enumerate(raw):
            ok = row[~np.isnan(row)]
            out[i] = ok[-1]
        return out


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _run_one(args):
    config, strategy, index = args
    if strategy is None:
        return run_trajectory(config, index)
    return run_hybrid_stirap(strategy, config, index)


def run_ensemble(config: ProtocolConfig, n_traj: int, strategy: str | None = None,
                 workers: int | None = None, start: int = 0) -> EnsembleStats:
    """Run trajectories ``start .. start + n_traj - 1`` and aggregate them.

    Trajectory ``i`` draws from the (seed, i) substream. Worker count defaults
    to the EIGENPURIFY_WORKERS environment variable, then to the CPU count.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    jobs = [(config, strategy, start + i) for i in range(n_traj)]
    nw = min(_worker_count(workers), n_traj)
    if nw == 1:
        logs = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            logs = list(ex.map(_run_one, jobs, chunksize=max(1, n_traj // (4 * nw))))
    return EnsembleStats.from_logs(logs, config.rounds)


def with_model(config: ProtocolConfig, **changes) -> ProtocolConfig:
    return replace(config, **changes)
