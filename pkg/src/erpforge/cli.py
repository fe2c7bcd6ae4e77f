"""Command-line entry point: ``erpforge <subcommand> ...``.

Exit status is 0 on success, 1 on data errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import alignment, bootstrap, estimators, io, losses, measures, synth
from .core import MeasureWindow, POSITIVE, NEGATIVE, TrialSet, single_channel, split_half
from .errors import ConfigError, ErpError

SEED_ENV = "ERPFORGE_SEED"


class UsageError(Exception):
    pass


def dump_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def resolve_seed(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def parse_span(text: str) -> tuple[float, float]:
    try:
        start, end = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"window must read 'start,end' in ms, got {text!r}") from None
    return start, end


def parse_k_grid(text: str) -> list[int]:
    try:
        grid = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"k-grid must be comma-separated integers, got {text!r}") from None
    if not grid or min(grid) < 1:
        raise UsageError("k-grid values must be positive integers")
    return grid


def _window(args, default_component: str = "P3") -> MeasureWindow:
    if args.window:
        start, end = parse_span(args.window)
        return MeasureWindow(start, end, getattr(args, "polarity", None) or POSITIVE)
    component = args.component or default_component
    if component not in alignment.WOODY_WINDOWS:
        raise UsageError(f"unknown component {component!r}")
    return alignment.woody_window(component)


def _ride_config(args) -> alignment.RideConfig:
    if args.window:
        start, end = parse_span(args.window)
        return alignment.RideConfig(c_window=MeasureWindow(start, end))
    component = args.component or "P3"
    if component not in alignment.RIDE_WINDOWS:
        raise UsageError(f"unknown component {component!r}")
    return alignment.RideConfig.for_component(component)


def _library(arg: Optional[str]) -> estimators.ErpLibrary:
    if not arg:
        raise UsageError("template and nn methods need --library")
    paths = []
    for part in arg.split(","):
        p = Path(part)
        paths.extend(sorted(p.glob("*.etb")) if p.is_dir() else [p])
    lib = estimators.ErpLibrary()
    for p in paths:
        erp, container = io.read_erp(p)
        lib.add(container.subject_id, container.task_id, erp)
    return lib


def _truth(trials: TrialSet) -> Optional[np.ndarray]:
    text = trials.annotations.get("true_latencies_ms")
    if not text:
        return None
    return np.array([float(v) for v in text.split(",")])


def _alignment_summary(trials: TrialSet, result: alignment.AlignmentResult) -> dict:
    out = {
        "shifts_samples": [int(s) for s in result.shifts_samples],
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
    }
    truth = _truth(trials)
    if truth is not None and truth.size == trials.n_trials:
        corr, rmse = synth.score_latency_recovery(truth, result.shifts_ms(trials.axis))
        out["correlation"] = corr
        out["centered_rmse_ms"] = rmse
    return out


# ---------------------------------------------------------------------------
# Subcommands

def cmd_simulate(args) -> int:
    cfg = synth.SimConfig(
        n_trials=args.n_trials,
        noise_scale=args.noise,
        amp_jitter=args.amp_jitter,
        drift_scale=args.drift,
        rng_seed=resolve_seed(args.seed),
    )
    result = synth.simulate(cfg)
    io.write_etb(result.trials, args.out)
    return 0


def _run_method(method: str, trials: TrialSet, args):
    """Return (erp, alignment summary or None)."""
    if method in ("woody", "ride"):
        trials = single_channel(trials, args.channel)
    if method == "woody":
        res = alignment.woody_align(trials, _window(args))
        return res.aligned_average, _alignment_summary(trials, res)
    if method == "ride":
        res = alignment.ride_decompose(trials, _ride_config(args))
        lat = res.latencies.get("C") or res.latencies.get("R")
        summary = {"iterations": res.iterations, "converged": res.converged}
        if lat is not None:
            summary.update(_alignment_summary(trials, lat))
            summary["iterations"], summary["converged"] = res.iterations, res.converged
        return res.reconstructed, summary
    if method in ("template", "nn"):
        lib = _library(args.library)
        est = bootstrap.make_estimator(method, library=lib, task=args.task)
        return est(trials), None
    est = bootstrap.make_estimator(method)
    return est(trials), None


def cmd_average(args) -> int:
    trials = io.read_trials(args.input)
    erp, summary = _run_method(args.method, trials, args)
    if args.out:
        io.write_erp(erp, args.out, trials.subject_id, trials.task_id)
    report = {"method": args.method, "n_trials": trials.n_trials}
    if summary:
        report.update(summary)
    if args.report:
        io.atomic_write_bytes(args.report, dump_json(report))
    elif args.out != "-":
        sys.stdout.buffer.write(dump_json(report))
    return 0


def cmd_align(args) -> int:
    trials = single_channel(io.read_trials(args.input), args.channel)
    if args.method == "woody":
        res = alignment.woody_align(trials, _window(args), args.max_iters)
        report = {"method": "woody", **_alignment_summary(trials, res)}
    else:
        res = alignment.ride_decompose(trials, _ride_config(args))
        report = {"method": "ride", "iterations": res.iterations, "converged": res.converged}
        report["components"] = {
            name: _alignment_summary(trials, lat) for name, lat in res.latencies.items()
        }
    io.atomic_write_bytes(args.report or "-", dump_json(report))
    return 0


def cmd_eval(args) -> int:
    seed = resolve_seed(args.seed)
    k_grid = parse_k_grid(args.k_grid)
    trials = io.read_trials(args.input)
    halves = split_half(trials, seed)
    opts = {}
    if args.estimator == "woody":
        opts["window"] = _window(args)
    elif args.estimator == "ride":
        opts["ride_config"] = _ride_config(args)
    elif args.estimator in ("template", "nn"):
        opts["library"] = _library(args.library)
        opts["task"] = args.task
    report = bootstrap.evaluate_estimator(
        halves,
        args.estimator,
        k_grid,
        args.bootstraps,
        args.mode,
        seed,
        channel=args.channel,
        **opts,
    )
    io.atomic_write_bytes(args.report or "-", dump_json(report.to_dict()))
    return 0


def cmd_measures(args) -> int:
    erp, _ = io.read_erp(args.input)
    start, end = parse_span(args.window)
    m = measures.erp_measures(erp, MeasureWindow(start, end, args.polarity), args.channel)
    sys.stdout.buffer.write(dump_json(m.as_dict()))
    return 0


def cmd_combine(args) -> int:
    estimates = [io.read_uncertain(p) for p in args.inputs]
    io.write_uncertain(losses.inverse_variance_combine(estimates), args.out)
    return 0


def cmd_convert(args) -> int:
    trials = io.read_trials(args.input)
    if str(args.out).lower().endswith(".csv"):
        io.write_csv(single_channel(trials, args.channel), args.out)
    else:
        io.write_etb(trials, args.out)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erpforge", description="ERP estimation from few trials.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated jittered P300 trials")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-")
    p.add_argument("--n-trials", type=int, default=50)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--amp-jitter", type=float, default=0.2)
    p.add_argument("--drift", type=float, default=0.5)
    p.set_defaults(func=cmd_simulate)

    def window_opts(q):
        q.add_argument("--window", help="latency window 'start,end' in ms")
        q.add_argument("--component", help="named component for default windows (default P3)")
        q.add_argument("--channel")

    p = sub.add_parser("average", help="estimate an ERP from a trial file")
    p.add_argument("--method", required=True, choices=bootstrap.ESTIMATORS)
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--library")
    p.add_argument("--task")
    window_opts(p)
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("align", help="report per-trial latency shifts")
    p.add_argument("--method", choices=("woody", "ride"), default="woody")
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--report")
    p.add_argument("--max-iters", type=int, default=20)
    window_opts(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="split-half bootstrap evaluation")
    p.add_argument("--estimator", required=True, choices=bootstrap.ESTIMATORS)
    p.add_argument("--k-grid", default="1,5,10")
    p.add_argument("--bootstraps", type=int, default=200)
    p.add_argument("--mode", choices=(bootstrap.RANDOM, bootstrap.CHRONOLOGICAL), default=bootstrap.RANDOM)
    p.add_argument("--seed", type=int)
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--report")
    p.add_argument("--library")
    p.add_argument("--task")
    window_opts(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("measures", help="peak, mean amplitude, area and onset latency")
    p.add_argument("--in", dest="input", default="-")
    p.add_argument("--window", required=True)
    p.add_argument("--polarity", choices=(POSITIVE, NEGATIVE), default=POSITIVE)
    p.add_argument("--channel")
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("combine", help="inverse-variance fusion of uncertain ERPs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("convert", help="convert between ETB and CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channel")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"erpforge: error: {exc}", file=sys.stderr)
        return 2
    except (ErpError, OSError) as exc:
        print(f"erpforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
