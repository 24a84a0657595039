#!/usr/bin/env python3
"""Timing harness: single-episode latency and parallel sweep throughput."""

from __future__ import annotations

import argparse
import time
from concurrent.futures import ProcessPoolExecutor

from carbonsim.config import SimConfig, save_config
from carbonsim.engine import run_named
from carbonsim.policies import government_policy_names


def _one(args):
    gov, seed = args
    run_named(SimConfig(), gov, "scripted", seed)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--episodes", type=int, default=5)
    ap.add_argument("--sweep-seeds", type=int, default=10)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    cfg = SimConfig()
    run_named(cfg, "flatxsi", "scripted", 0)  # warm-up
    times = []
    for seed in range(args.episodes):
        t0 = time.perf_counter()
        run_named(cfg, "flatxsi", "scripted", seed)
        times.append(time.perf_counter() - t0)
    print(f"single episode ({cfg.horizon} steps, {cfg.n_enterprises} agents): "
          f"min {min(times) * 1000:.1f} ms, "
          f"mean {sum(times) / len(times) * 1000:.1f} ms over {len(times)} runs")

    jobs = [(gov, seed) for gov in government_policy_names()
            for seed in range(1, args.sweep_seeds + 1)]
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        list(pool.map(_one, jobs))
    dt = time.perf_counter() - t0
    print(f"sweep of {len(jobs)} episodes (parallel): {dt:.2f} s "
          f"({dt / len(jobs) * 1000:.1f} ms/episode)")


if __name__ == "__main__":
    main()
