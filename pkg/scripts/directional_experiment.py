#!/usr/bin/env python3
"""Directional policy comparison under scripted enterprises.

Runs Flat/Decreasing/Convex x SI baselines plus a punishment ladder over a
seed range (in parallel) and reports one-sided Mann-Whitney tests for:
  * Decreasing x SI < Flat x SI on cumulative emissions and productivity
  * Flat x SI highest excess emissions among the three schedules
  * excess emissions fall monotonically as punishment rises 0 -> max
"""

from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
from statistics import mean

from scipy.stats import mannwhitneyu

from carbonsim.config import SimConfig
from carbonsim.engine import run_named


def _episode(args):
    gov, seed, punishment = args
    trace = run_named(SimConfig(), gov, "scripted", seed, punishment)
    s = trace.summary
    return {
        "cum_emissions": s["cumulative_emissions"],
        "excess": s["excess_emissions"],
        "prod": s["final_metrics"]["prod"],
    }


def collect(jobs, workers):
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_episode, jobs))


def less(a, b):
    """One-sided p-value for the hypothesis median(a) < median(b)."""
    return mannwhitneyu(a, b, alternative="less").pvalue


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--workers", type=int, default=8)
    ap.add_argument("--punishments", type=float, nargs="*",
                    default=[0.0, 10.0, 20.0, 30.0, 40.0])
    args = ap.parse_args()
    seeds = range(1, args.seeds + 1)

    govs = ["flatxsi", "decreasingxsi", "convexxsi"]
    results = {g: collect([(g, s, None) for s in seeds], args.workers) for g in govs}
    get = lambda g, k: [r[k] for r in results[g]]

    print("== schedule comparison (x SI, default punishment) ==")
    for g in govs:
        print(f"{g:>14}: cumE {mean(get(g, 'cum_emissions')):8.1f}  "
              f"excess {mean(get(g, 'excess')):6.2f}  prod {mean(get(g, 'prod')):9.1f}")
    print(f"decreasing < flat cumE:    p = {less(get('decreasingxsi','cum_emissions'), get('flatxsi','cum_emissions')):.3g}")
    print(f"decreasing < flat prod:    p = {less(get('decreasingxsi','prod'), get('flatxsi','prod')):.3g}")
    print(f"decreasing < flat excess:  p = {less(get('decreasingxsi','excess'), get('flatxsi','excess')):.3g}")
    print(f"convex     < flat excess:  p = {less(get('convexxsi','excess'), get('flatxsi','excess')):.3g}")

    print("== punishment ladder (flat x SI) ==")
    ladder = {p: collect([("flatxsi", s, p) for s in seeds], args.workers)
              for p in args.punishments}
    for p, rows in ladder.items():
        print(f"p = {p:5.1f}: excess {mean(r['excess'] for r in rows):6.2f}")
    lo, hi = min(args.punishments), max(args.punishments)
    p_dir = less([r["excess"] for r in ladder[hi]], [r["excess"] for r in ladder[lo]])
    print(f"excess(p={hi}) < excess(p={lo}): p = {p_dir:.3g}")


if __name__ == "__main__":
    main()
