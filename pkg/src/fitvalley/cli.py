"""Command-line entry point: validate | theory | simulate | experiment | selftest."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import secrets
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import engine, harness, theory
from .model import ConfigError, classify_landscape, load_config, model_from_dict, scale_warnings, validate_model

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="model configuration (JSON)")
    p.add_argument("--seed", type=int, help="base seed (u64); generated and printed if absent")
    p.add_argument("--replicas", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="fitvalley", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a configuration")
    sub.add_parser("theory", parents=[common], help="closed-form predictions")
    sim = sub.add_parser("simulate", parents=[common], help="one replica, trajectory CSV")
    sim.add_argument("--max-time", type=float, help="simulation horizon (default: 10 periods)")
    sim.add_argument("--invasion-epsilon", type=float, default=0.0)
    sim.add_argument("--stride", type=float, help="trajectory sampling interval")
    exp = sub.add_parser("experiment", parents=[common], help="replicated experiment")
    exp.add_argument("kind", choices=harness.KINDS)
    sub.add_parser("selftest", parents=[common], help="bdp and ode oracle checks")
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise SystemExit("--seed must be an unsigned 64-bit integer")
        return args.seed
    seed = secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _load(args):
    if not args.config:
        raise ConfigError("--config is required")
    path = Path(args.config)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    doc = load_config(path)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    model, scaling = model_from_dict(doc)
    return doc, model, scaling, hashlib.sha256(raw).hexdigest()


def _provenance(digest: Optional[str], seed: Optional[int]) -> str:
    return f"config_sha256={digest} seed={seed}"


def _out_dir(args) -> Optional[Path]:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict, digest, seed) -> None:
    # JSON has no comments: the provenance record is the first key instead
    path.write_text(json.dumps({"provenance": _provenance(digest, seed), **doc}, indent=2) + "\n")


def cmd_validate(args) -> int:
    _, model, scaling, _ = _load(args)
    problems = validate_model(model, scaling)
    for p in problems:
        print(f"violation: {p}")
    if problems:
        return EXIT_FAIL
    for w in scale_warnings(scaling):
        print(f"warning: {w}")
    cls = classify_landscape(model, scaling, theory.fitness_table(model))
    print(f"ok: {type(cls).__name__}" + (f" ({cls.reason})" if hasattr(cls, "reason") else ""))
    return EXIT_OK


def _fitness_rows(report: dict):
    fit = report["fitness"]
    for i, (eq, fv) in enumerate(zip(fit["equilibria"], fit["phase_fitness_vs_0"]), start=1):
        for v, (n, f) in enumerate(zip(eq, fv)):
            yield [i, v, n, f]


def cmd_theory(args) -> int:
    _, model, scaling, digest = _load(args)
    problems = validate_model(model, scaling)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_FAIL
    report = theory.theory_report(model, scaling)
    out = _out_dir(args)
    if args.format == "csv":
        w = csv.writer(sys.stdout)
        w.writerow(["phase", "trait", "equilibrium", "fitness_vs_0"])
        w.writerows(_fitness_rows(report))
    else:
        print(json.dumps(report, indent=2))
    if out is not None:
        _write_json(out / "theory.json", report, digest, None)
        with open(out / "fitness.csv", "w", newline="") as fh:
            fh.write(f"# {_provenance(digest, None)}\n")
            w = csv.writer(fh)
            w.writerow(["phase", "trait", "equilibrium", "fitness_vs_0"])
            w.writerows(_fitness_rows(report))
    return EXIT_OK


def cmd_simulate(args) -> int:
    _, model, scaling, digest = _load(args)
    problems = validate_model(model, scaling)
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_FAIL
    seed = _seed(args)
    horizon = args.max_time if args.max_time is not None else 10 * model.period * scaling.lambda_k
    stop = engine.StopSpec(invasion_epsilon=args.invasion_epsilon, max_time=horizon)
    res = engine.run(engine.initial_state(model, scaling), model, scaling, stop,
                     harness.replica_rng(seed, 0), sample_stride=args.stride)
    summary = {
        "stop_reason": res.stop_reason,
        "time": res.state.time,
        "counts": res.state.counts.tolist(),
        "events": res.observables.events,
        "first_arrival": [None if math.isnan(t) else t for t in res.observables.first_arrival],
    }
    print(json.dumps(summary))
    out = _out_dir(args)
    if out is not None:
        prov = _provenance(digest, seed)
        engine.write_trajectory_csv(out / "trajectory.csv", res.observables, prov)
        engine.write_arrivals_csv(out / "arrivals.csv", res.observables, prov)
        if args.format == "json":
            _write_json(out / "run.json", summary, digest, seed)
    return EXIT_OK


def cmd_experiment(args) -> int:
    seed = _seed(args)
    if args.kind == "excursion" and not args.config:
        doc, model, scaling, digest = {}, None, None, None
    else:
        doc, model, scaling, digest = _load(args)
    try:
        spec = harness.experiment_from_dict(doc, model, scaling, kind=args.kind)
    except TypeError as exc:
        raise ConfigError(f"malformed experiment block: {exc}") from exc
    spec.base_seed = seed
    spec.workers = args.workers
    if args.replicas is not None:
        spec.replicas = args.replicas
    try:
        stats = harness.run_experiment(spec)
    except ValueError as exc:
        print(f"experiment refused: {exc}", file=sys.stderr)
        return EXIT_FAIL
    doc_out = stats.to_dict()
    shown = {k: v for k, v in doc_out.items() if k != "samples"}
    print(json.dumps(shown, indent=2))
    out = _out_dir(args)
    if out is not None:
        harness.write_summary(stats, out, {"config_sha256": digest, "seed": seed})
    for name, ok in stats.criteria.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    return EXIT_OK if stats.passed else EXIT_FAIL


def cmd_selftest(args) -> int:
    seed = _seed(args)
    n = args.replicas or 100_000
    results = harness.selftest(seed, n)
    for name, (ok, detail) in results.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    out = _out_dir(args)
    if out is not None:
        _write_json(out / "selftest.json", {k: {"passed": ok, "detail": d} for k, (ok, d) in results.items()},
                    None, seed)
    return EXIT_OK if all(ok for ok, _ in results.values()) else EXIT_FAIL


COMMANDS = {
    "validate": cmd_validate,
    "theory": cmd_theory,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
    "selftest": cmd_selftest,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
