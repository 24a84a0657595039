"""Command-line entry points: run, report, replay, sweep.

Exit codes: 0 success, 1 runtime failure (including a failed replay
verification), 2 usage error. The default output directory can be set via
the CARBONSIM_OUT environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, SimConfig, load_config
from .engine import replay, run_named
from .policies import INDICATORS, SCHEDULES, PolicyError, government_policy_names
from .report import ReportError, build_report, load_traces, trace_row, write_charts
from .trace import first_divergence, load_trace


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """Accepts "7", "1,2,5", and inclusive ranges "1..10"."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise UsageError(f"no seeds in {text!r}")
    return seeds


def _load_cfg(path: str | None) -> SimConfig:
    if path is None:
        return SimConfig()
    return load_config(Path(path).read_text())


def _out_dir(arg: str | None) -> Path:
    out = Path(arg or os.environ.get("CARBONSIM_OUT", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def trace_filename(gov: str, ent: str, punishment: float | None, seed: int) -> str:
    p = "" if punishment is None else f"_p{punishment:g}"
    return f"{gov}_{ent}{p}_s{seed}.trace.jsonl"


def _run_one(args: tuple) -> tuple[str, dict]:
    cfg_text, gov, ent, punishment, seed, out_dir = args
    cfg = load_config(cfg_text)
    trace = run_named(cfg, gov, ent, seed, punishment)
    path = Path(out_dir) / trace_filename(gov, ent, punishment, seed)
    trace.save(path)
    return str(path), trace_row(trace)


def cmd_run(args) -> int:
    cfg = _load_cfg(args.config)
    seeds = parse_seeds(args.seeds)
    out = _out_dir(args.out)
    traces = []
    for seed in seeds:
        trace = run_named(cfg, args.gov_policy, args.ent_policy, seed, args.punishment)
        trace.save(out / trace_filename(args.gov_policy, args.ent_policy,
                                        args.punishment, seed))
        traces.append(trace)
    table = build_report(traces)
    print(table.to_text())
    print(f"wrote {len(traces)} trace(s) to {out}")
    return 0


def cmd_report(args) -> int:
    traces = load_traces(args.traces)
    table = build_report(traces)
    print(table.to_text())
    out = _out_dir(args.out)
    (out / "report.csv").write_text(table.to_csv() + "\n")
    (out / "report.txt").write_text(table.to_text() + "\n")
    charts = write_charts(table, out)
    print(f"wrote report.csv, report.txt and {len(charts)} chart(s) to {out}")
    return 0


def cmd_replay(args) -> int:
    original = load_trace(args.trace)
    regenerated = replay(original.header)
    where = first_divergence(original, regenerated)
    if where is None:
        print(f"verified: {args.trace} ({original.digest()})")
        return 0
    lines_orig = original.lines()
    lines_new = regenerated.lines()
    print(f"DIVERGED at line {where}:")
    print(f"  trace : {lines_orig[where] if where < len(lines_orig) else '<missing>'}")
    print(f"  replay: {lines_new[where] if where < len(lines_new) else '<missing>'}")
    return 1


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args.config)
    seeds = parse_seeds(args.seeds)
    punishments = ([float(p) for p in args.punishments.split(",")]
                   if args.punishments else [None])
    out = _out_dir(args.out)
    from .config import save_config

    cfg_text = save_config(cfg)
    jobs = [
        (cfg_text, f"{sched}x{ind}", args.ent_policy, punishment, seed, str(out))
        for sched in SCHEDULES
        for ind in (INDICATORS if args.indicators is None else args.indicators.split(","))
        for punishment in punishments
        for seed in seeds
    ]
    if args.jobs == 1:
        results = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    traces = load_traces(out)
    table = build_report(traces)
    print(table.to_text())
    (out / "report.csv").write_text(table.to_csv() + "\n")
    print(f"ran {len(results)} episode(s); results under {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carbonsim",
        description="Deterministic cap-and-trade carbon-market simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run episodes and write traces")
    run_p.add_argument("--config", help="config JSON file (defaults apply if omitted)")
    run_p.add_argument("--gov-policy", default="flatxsi",
                       help=f"one of {', '.join(government_policy_names())}")
    run_p.add_argument("--ent-policy", default="scripted")
    run_p.add_argument("--seeds", default="0", help='e.g. "0", "1..10", "1,4,9"')
    run_p.add_argument("--punishment", type=float, default=None)
    run_p.add_argument("--out", default=None)
    run_p.set_defaults(func=cmd_run)

    rep_p = sub.add_parser("report", help="aggregate traces into tables and charts")
    rep_p.add_argument("--traces", required=True, help="directory of *.trace.jsonl files")
    rep_p.add_argument("--out", default=None)
    rep_p.set_defaults(func=cmd_report)

    play_p = sub.add_parser("replay", help="verify a trace replays byte-identically")
    play_p.add_argument("trace")
    play_p.set_defaults(func=cmd_replay)

    sweep_p = sub.add_parser("sweep", help="run the schedule x indicator grid")
    sweep_p.add_argument("--config", default=None)
    sweep_p.add_argument("--ent-policy", default="scripted")
    sweep_p.add_argument("--indicators", default=None, help="comma list, default all")
    sweep_p.add_argument("--punishments", default=None, help="comma list of punishment levels")
    sweep_p.add_argument("--seeds", default="1..10")
    sweep_p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sweep_p.add_argument("--out", default=None)
    sweep_p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ConfigError, PolicyError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
