"""Command-line entry point: ``morphoevo evolve|simulate|calibrate``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import genome
from .de import DeConfig
from .ehgrn import baseline
from .field import CalibrationInfeasible, calibrate
from .fitness import FitnessConfig
from .nsga2 import EvolutionConfig, evolve
from .render import frame_svg
from .scenarios import ScenarioError, load_scenario, run_model

EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("morphoevo")


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("MORPHOEVO_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"MORPHOEVO_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be at least 1")
    return n


def _scenario(path):
    try:
        return load_scenario(path)
    except ScenarioError as e:
        raise UsageError(str(e)) from None


def _hash_inputs(scenario, extra: dict) -> str:
    blob = json.dumps({"scenario": scenario.to_dict(), "args": extra}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out: Path, args, scenario, extra, started, evaluations):
    manifest = {
        "command": args.command,
        "argv": list(args.argv),
        "config_paths": [str(args.scenario)],
        "seed": args.seed,
        "input_hash": _hash_inputs(scenario, extra),
        "started": started,
        "finished": _now(),
        "evaluations": evaluations,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_evolve(args) -> int:
    started = _now()
    scenario = _scenario(args.scenario)
    if args.budget < args.pop:
        raise UsageError(f"budget ({args.budget}) must be at least the population size ({args.pop})")
    try:
        cfg = EvolutionConfig(pop_size=args.pop, eval_budget=args.budget, seed=args.seed,
                              count_inner_evals=args.count_inner_evals, threads=_threads(args))
    except ValueError as e:
        raise UsageError(str(e)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    archive = evolve(scenario, cfg, DeConfig(), FitnessConfig())

    knees = set(archive.knees)
    rows = [(i, m.objectives.f1, repr(m.objectives.f2), int(i in knees), m.text)
            for i, m in enumerate(archive.members)]
    (out / "pareto.csv").write_text(_csv_text(["id", "f1", "f2", "is_knee", "tree"], rows))
    prog = [(h["generation"], h["evaluations"], h["front_size"], repr(h["hypervolume"]), repr(h["best_f2"]))
            for h in archive.history]
    (out / "progress.csv").write_text(
        _csv_text(["generation", "evaluations", "front_size", "hypervolume", "best_f2"], prog))
    extra = {"seed": args.seed, "budget": args.budget, "pop": args.pop,
             "count_inner_evals": args.count_inner_evals}
    _write_manifest(out, args, scenario, extra, started, archive.evaluations)
    best = archive.members[archive.knees[0]]
    print(f"{len(archive.members)} non-dominated solutions, {archive.evaluations} evaluations")
    print(f"knee: f1={best.objectives.f1} f2={best.objectives.f2:.6g} {best.text}")
    return 0


def _read_model(text: str):
    p = Path(text)
    if not text.lstrip().startswith("(") and p.is_file():
        text = p.read_text().strip()
    try:
        return genome.parse(text)
    except ValueError as e:
        raise UsageError(f"cannot parse model: {e}") from None


def cmd_simulate(args) -> int:
    started = _now()
    scenario = _scenario(args.scenario)
    if (args.model is None) == (args.baseline is None):
        raise UsageError("give exactly one of --model or --baseline")
    model = _read_model(args.model) if args.model is not None else baseline(args.baseline, args.literal)
    fit = FitnessConfig()
    report = run_model(model, scenario, fit)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    for row in report.waypoints:
        svg = frame_svg(scenario, row, fit.d_min, fit.d_max, fit.d_obs_min)
        (out / f"frame_{row['index']:02d}.svg").write_text(svg)
    extra = {"model": report.model}
    _write_manifest(out, args, scenario, extra, started, 0)
    v = report.violations
    print(f"f2={report.f2:.6g} violations: d_min={v['d_min']} d_max={v['d_max']} "
          f"d_obs_min={v['d_obs_min']} degenerate={v['degenerate']}")
    return 0


def cmd_calibrate(args) -> int:
    started = _now()
    scenario = _scenario(args.scenario)
    ref_text = args.reference or scenario.reference or "(POS 1.0 x1)"
    ref = _read_model(ref_text)
    size = min(scenario.region.width, scenario.region.height)
    tau_grid = [args.tau] if args.tau is not None else None
    if args.tau is not None and not 0 < args.tau < 1:
        raise UsageError("--tau must lie in (0, 1)")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fcfg = scenario.field
    try:
        res = calibrate(ref, size=size, resolution=scenario.region.resolution,
                        lambda_o=fcfg.lambda_o, perception_radius=fcfg.perception_radius,
                        tau_grid=tau_grid)
        table, status = res.table, 0
    except CalibrationInfeasible as e:
        res, status = None, EXIT_INFEASIBLE
        table = e.table
        print(f"calibration infeasible: {e.args[0]}", file=sys.stderr)

    cols = ["lambda_t", "tau", "r_min", "r_max", "r_mean", "feasible", "score"]
    rows = [[("" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])) for c in cols]
            for r in table]
    (out / "sweep.csv").write_text(_csv_text(cols, rows))
    result = {"reference": genome.serialize(ref), "feasible": res is not None}
    if res is not None:
        result.update(lambda_t=res.lambda_t, tau=res.tau, score=round(res.score, 9))
        print(f"lambda_t={res.lambda_t} tau={res.tau} (score {res.score:.4f})")
    (out / "calibration.json").write_text(json.dumps(result, indent=2) + "\n")
    extra = {"reference": genome.serialize(ref), "tau": args.tau}
    _write_manifest(out, args, scenario, extra, started, 0)
    return status


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morphoevo", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario file or built-in name (channel, channel_two, compound)")
        sp.add_argument("--seed", type=_u64, default=0)
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $MORPHOEVO_THREADS or 1)")
        sp.add_argument("--out", default="out", help="output directory")

    e = sub.add_parser("evolve", help="co-evolve GRN structure and thresholds")
    common(e)
    e.add_argument("--budget", type=int, default=4000)
    e.add_argument("--pop", type=int, default=40)
    e.add_argument("--count-inner-evals", type=_bool, default=True, metavar="true|false")
    e.set_defaults(func=cmd_evolve)

    s = sub.add_parser("simulate", help="run one model along the scenario trajectory")
    common(s)
    s.add_argument("--model", help="tree text or a file containing it")
    s.add_argument("--baseline", choices=("task1", "task2"))
    s.add_argument("--literal", action="store_true",
                   help="use the uncompleted reference form of the second baseline")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="choose lambda_t and tau for an isolated target")
    common(c)
    c.add_argument("--reference", help="reference tree (default: the scenario's, else (POS 1.0 x1))")
    c.add_argument("--tau", type=float, default=None, help="force a single tau value")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"morphoevo: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
