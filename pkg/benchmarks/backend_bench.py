#!/usr/bin/env python3
"""Compare the numba kernels against their pure-Python twins.

Runs the event-driven simulator and the trace-level policy machines on both
backends with identical inputs, checks the outputs agree, and prints the
speedups.  Usage: python benchmarks/backend_bench.py [--quick]
"""

import argparse
import os
import sys
import time

import numpy as np


def timed(fn, *args, repeat=3, **kwargs):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads (roughly 10x faster)")
    args = parser.parse_args()
    scale = 10 if args.quick else 1

    from cacheqn.backend import ENV_VAR, HAS_NUMBA
    from cacheqn.policies import LRU, CLOCK, S3FIFO, build_network
    from cacheqn.simulate import SimConfig, simulate
    from cacheqn.tracelab import Workload, run_policy, zipf_trace

    if not HAS_NUMBA:
        sys.exit("numba not importable; nothing to compare")

    sim_cycles = 100_000 // scale
    trace_len = 2_000_000 // scale

    rows = []

    def compare(name, fn, equal):
        os.environ[ENV_VAR] = "numba"
        fn()  # absorb JIT compilation
        t_nb, a = timed(fn)
        os.environ[ENV_VAR] = "python"
        t_py, b = timed(fn, repeat=1)
        os.environ[ENV_VAR] = "auto"
        rows.append((name, t_py, t_nb, t_py / t_nb, "yes" if equal(a, b) else "NO"))

    net = build_network(LRU(), 0.9)
    cfg = SimConfig(cycles=sim_cycles, warmup=sim_cycles // 10, seed=7)
    compare(
        f"simulator (LRU p=0.9, {sim_cycles} cycles)",
        lambda: simulate(net, cfg),
        lambda a, b: a == b,
    )

    w = Workload(universe=100_000, theta=0.99, length=trace_len, seed=3)
    tr = zipf_trace(w)

    def trace_eq(a, b):
        return (a.hits, a.misses, a.final_occupancy) == (b.hits, b.misses, b.final_occupancy)

    for policy, cap in ((LRU(), 20_000), (CLOCK(), 20_000), (S3FIFO(), 20_000)):
        compare(
            f"trace replay ({policy.name}, {trace_len} keys)",
            lambda p=policy, c=cap: run_policy(p, c, tr, universe=w.universe, seed=1),
            trace_eq,
        )

    name_w = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{name_w}}  {'python':>9}  {'numba':>9}  {'speedup':>8}  equal")
    for name, t_py, t_nb, speedup, equal in rows:
        print(f"{name:<{name_w}}  {t_py:>8.2f}s  {t_nb:>8.3f}s  {speedup:>7.0f}x  {equal}")


if __name__ == "__main__":
    main()
