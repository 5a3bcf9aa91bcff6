"""Command-line front end: ``eigenpurify run | reproduce | validate``.

Exit codes: 0 pass, 1 acceptance miss or runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__
from .checks import run_suite
from .errors import PurifyError
from .figures import DEFAULT_TRAJ, FIGURES, RUNNERS
from .models import BELL_LABELS, GHZ_LABELS, PulseSchedule, bell_xx_model, ghz_ising_model, stirap_model
from .protocol import EnsembleStats, ProtocolConfig, run_ensemble

EXIT_OK, EXIT_MISS, EXIT_USAGE = 0, 1, 2

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_BELL_TARGETS = list(BELL_LABELS) + ["psi_minus", "psi_plus", "phi_minus", "phi_plus",
                                     "Psi-", "Psi+", "Phi-", "Phi+"]

_MODEL_PARAMS = {
    "bell_xx": {"type": "object", "additionalProperties": False, "properties": {
        "omega0": _NUM, "g_s": _POS, "g_a": _POS, "omega_a": _NUM,
        "target_label": {"enum": _BELL_TARGETS}, "projector": {"type": "boolean"}}},
    "ghz_ising": {"type": "object", "additionalProperties": False, "properties": {
        "j": _POS, "g_a": _POS,
        "unwanted": {"type": "array", "minItems": 1, "items": {"enum": list(GHZ_LABELS[1:])}}}},
    "stirap": {"type": "object", "additionalProperties": False, "properties": {
        "omega0": _POS, "g_a": _POS, "t_c": _POS}},
}

_MATRIX = {"type": "array", "items": {"type": "array", "items": _NUM}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "protocol"],
    "properties": {
        "model": {
            "type": "object", "additionalProperties": False, "required": ["name"],
            "properties": {"name": {"enum": list(_MODEL_PARAMS)}, "params": {"type": "object"}},
            "allOf": [{"if": {"properties": {"name": {"const": k}}},
                       "then": {"properties": {"params": v}}} for k, v in _MODEL_PARAMS.items()],
        },
        "protocol": {
            "type": "object", "additionalProperties": False, "required": ["rounds", "tau0"],
            "properties": {
                "rounds": {"type": "integer", "minimum": 1},
                "tau0": _POS,
                "jitter": {"enum": ["uniform", "none"]},
                "mode": {"enum": ["conditioned", "monte_carlo"]},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "strategy": {"enum": ["pure", "hybrid1", "hybrid2"]},
                "steady": {"type": "object", "additionalProperties": False, "properties": {
                    "eps": _POS, "k": {"type": ["integer", "null"], "minimum": 1}}},
                "initial": {"oneOf": [
                    {"type": "string"},
                    {"type": "object", "additionalProperties": False, "required": ["real"],
                     "properties": {"real": _MATRIX, "imag": _MATRIX}}]},
            },
        },
        "ensemble": {"type": "object", "additionalProperties": False, "properties": {
            "trajectories": {"type": "integer", "minimum": 1},
            "workers": {"type": ["integer", "null"], "minimum": 1}}},
        "output": {"type": "object", "additionalProperties": False, "properties": {
            "csv": {"type": "string"}, "summary": {"type": "string"}}},
    },
}

SUMMARY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "model", "trajectories", "final_fidelity", "final_success_prob",
                 "status", "config"],
    "properties": {
        "version": {"type": "string"},
        "model": {"type": "string"},
        "unit": {"type": "string"},
        "trajectories": {"type": "integer", "minimum": 1},
        "final_fidelity": {"type": "number"},
        "final_success_prob": {"type": "number"},
        "first_passage": {"type": ["number", "null"]},
        "status": {"type": "object", "additionalProperties": {"type": "integer"}},
        "config": SCHEMA,
    },
}


class UsageError(Exception):
    pass


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise UsageError(f"config is not valid YAML: {exc}") from exc
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"config rejected at {where}: {exc.message}") from exc
    return doc


def build_model(model_doc: dict):
    name = model_doc["name"]
    params = dict(model_doc.get("params") or {})
    if name == "bell_xx":
        return bell_xx_model(**params)
    if name == "ghz_ising":
        return ghz_ising_model(**params)
    t_c = params.pop("t_c", 15.0)
    omega0 = params.get("omega0", 1.0)
    return stirap_model(schedule=PulseSchedule(omega0=omega0, t_c=t_c), **params)


def build_config(doc: dict, seed=None, mode=None) -> tuple[ProtocolConfig, str | None]:
    model = build_model(doc["model"])
    p = doc["protocol"]
    steady = p.get("steady", {})
    initial = p.get("initial")
    if isinstance(initial, dict):
        re = np.asarray(initial["real"], dtype=float)
        im = np.asarray(initial.get("imag", np.zeros_like(re)), dtype=float)
        if re.shape != (model.dim, model.dim) or im.shape != re.shape:
            raise UsageError(f"initial matrix must be {model.dim}x{model.dim}")
        initial = re + 1j * im
        model.initial_state(initial)
    elif isinstance(initial, str):
        model.initial_state(initial)
    strategy = p.get("strategy")
    if strategy is not None and model.schedule is None:
        raise UsageError("protocol.strategy requires the stirap model")
    cfg = ProtocolConfig(
        model=model, rounds=p["rounds"], tau0=float(p["tau0"]),
        jitter=p.get("jitter", "uniform"), mode=mode or p.get("mode", "conditioned"),
        seed=int(p.get("seed", 0) if seed is None else seed),
        steady_eps=float(steady.get("eps", 1e-6)), steady_k=steady.get("k", 5),
        initial=initial,
    )
    return cfg, strategy


def _fmt(x) -> str:
    return repr(float(x))


def result_rows(stats: EnsembleStats, labels) -> tuple[list, list]:
    """Per-round ensemble means; rounds no trajectory reached are dropped."""
    header = ["round", "time", "interval", "p_phi", "success_prob", "fidelity"]
    header += [f"pop_{lab}" for lab in labels]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cols = [np.nanmean(a, axis=0) for a in (stats.time_raw, stats.tau_raw, stats.p_phi_raw,
                                                stats.success_raw, stats.fidelity_raw)]
        pops = np.nanmean(stats.populations_raw, axis=0)
    rows = []
    for m in range(len(cols[0])):
        vals = [c[m] for c in cols] + list(pops[m])
        if not np.all(np.isfinite(vals)):
            continue
        rows.append([str(m)] + [_fmt(v) for v in vals])
    return header, rows


def write_table(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_timeline(path: Path, timeline):
    times, values = timeline
    write_table(path, ["time", "population_target"],
                [[_fmt(t), _fmt(v)] for t, v in zip(times, values)])


def _json_dump(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args) -> int:
    doc = load_config(args.config)
    try:
        cfg, strategy = build_config(doc, args.seed, args.mode)
    except (PurifyError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    ens = doc.get("ensemble", {})
    n_traj = args.trajectories or ens.get("trajectories", 1)
    out_doc = doc.get("output", {})
    csv_path = Path(args.out or out_doc.get("csv", "results.csv"))
    summary_path = Path(out_doc["summary"]) if "summary" in out_doc and not args.out \
        else csv_path.with_suffix(".json")
    stats = run_ensemble(cfg, n_traj, strategy=strategy, workers=ens.get("workers"))
    header, rows = result_rows(stats, cfg.model.labels)
    write_table(csv_path, header, rows)

    status = {s: stats.status.count(s) for s in sorted(set(stats.status))}
    final_f = float(np.mean(stats.final("fidelity")))
    fp = stats.first_passage_raw
    fp = float(np.mean(fp)) if np.all(np.isfinite(fp)) else None
    echo = json.loads(json.dumps(doc))
    echo["protocol"]["seed"] = cfg.seed
    echo["protocol"]["mode"] = cfg.mode
    summary = {
        "version": __version__, "model": cfg.model.name, "unit": cfg.model.unit,
        "trajectories": n_traj, "final_fidelity": final_f,
        "final_success_prob": float(np.mean(stats.final("success"))),
        "first_passage": fp, "status": status, "config": echo,
    }
    jsonschema.validate(summary, SUMMARY_SCHEMA)
    _json_dump(summary_path, summary)
    print(f"wrote {csv_path} and {summary_path}: F = {final_f:.6f}, "
          f"P_s = {summary['final_success_prob']:.6f}, status {status}")
    if status.get("failed", 0) == n_traj:
        print("every trajectory failed", file=sys.stderr)
        return EXIT_MISS
    return EXIT_OK


def cmd_reproduce(args) -> int:
    figures = FIGURES if args.figure == "all" else (args.figure,)
    out_dir = Path(args.out or "reproduce")
    all_ok = True
    report = {"version": __version__, "seed": args.seed, "figures": {}}
    for fig in figures:
        n = args.trajectories or DEFAULT_TRAJ[fig]
        res = RUNNERS[fig](n_traj=n, seed=args.seed)
        for name, (stats, labels) in res.tables.items():
            write_table(out_dir / f"{name}.csv", *result_rows(stats, labels))
        for name, timeline in res.timelines.items():
            write_timeline(out_dir / f"{name}_timeline.csv", timeline)
        report["figures"][fig] = {"trajectories": n, "passed": res.passed,
                                  "metrics": [m.as_dict() for m in res.metrics]}
        for m in res.metrics:
            print(f"{'PASS' if m.passed else 'FAIL'}  {fig}  {m.name}: {m.value:.6g} (target {m.target})")
        all_ok &= res.passed
    _json_dump(out_dir / "comparison.json", report)
    return EXIT_OK if all_ok else EXIT_MISS


def cmd_validate(args) -> int:
    t0 = time.perf_counter()
    results = run_suite(args.level, tamper=args.tamper)
    for r in results:
        print(r.row())
    bad = sum(not r.passed for r in results)
    print(f"{len(results) - bad}/{len(results)} checks passed in {time.perf_counter() - t0:.2f} s")
    return EXIT_OK if bad == 0 else EXIT_MISS


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eigenpurify",
                                 description="Ancilla-measurement purification into target eigenstates.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trajectories", type=int)
    run.add_argument("--out", help="CSV path; the JSON summary goes next to it")
    run.add_argument("--mode", choices=["conditioned", "monte_carlo"])
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("reproduce", help="rerun a published figure and compare against its targets")
    rep.add_argument("--figure", required=True, choices=list(FIGURES) + ["all"])
    rep.add_argument("--trajectories", type=int)
    rep.add_argument("--seed", type=int, default=0)
    rep.add_argument("--out", help="output directory")
    rep.set_defaults(func=cmd_reproduce)

    val = sub.add_parser("validate", help="run the invariant suites")
    val.add_argument("--level", choices=["fast", "full"], default="fast")
    val.add_argument("--tamper", action="store_true",
                     help="inject an odd-in-H_P term; the suite must then fail")
    val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if getattr(args, "trajectories", None) is not None and args.trajectories < 1:
        print("error: --trajectories must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PurifyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISS


if __name__ == "__main__":
    sys.exit(main())
