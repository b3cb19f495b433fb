"""Sweep orchestration and plot-ready CSV emission.

One row per (prong, configuration, grid point).  Fixed header order, full-
precision decimal numbers, a derived requests/second column (throughput is
computed in requests/us).  Grid points are independent, so sim sweeps may
fan out over a thread pool; results are merged in configuration order.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .policies import (
    Policy,
    ProbLRU,
    bound_curve,
    build_network,
    default_p_grid,
    default_params,
)
from .simulate import SimConfig, replicate

CSV_HEADER = (
    "prong",
    "policy",
    "q",
    "disk_us",
    "mpl",
    "p_hit",
    "throughput_req_per_us",
    "throughput_rps",
    "ci_half",
    "binding_term",
    "bottleneck",
)


@dataclass(frozen=True)
class SweepSpec:
    prongs: tuple[str, ...]
    policies: tuple[Policy, ...]
    disks_us: tuple[float, ...] = (5.0, 100.0, 500.0)
    mpls: tuple[int, ...] = (72,)
    grid: tuple[float, ...] = field(default_factory=lambda: tuple(default_p_grid()))
    seed: int = 0

    def __post_init__(self):
        if not self.prongs or not self.policies or not self.grid:
            raise ValueError("prongs, policies, and grid must be non-empty")
        unknown = set(self.prongs) - {"bound", "sim", "bench"}
        if unknown:
            raise ValueError(f"unknown prongs {sorted(unknown)}")


@dataclass(frozen=True)
class ReportRow:
    prong: str
    policy: str
    q: float | None
    disk_us: float
    mpl: int
    p_hit: float
    throughput: float  # requests per microsecond
    ci_half: float | None
    binding_term: str
    bottleneck: str

    def as_csv(self) -> list[str]:
        return [
            self.prong,
            self.policy,
            "" if self.q is None else repr(self.q),
            repr(self.disk_us),
            str(self.mpl),
            repr(self.p_hit),
            repr(self.throughput),
            repr(self.throughput * 1e6),
            "" if self.ci_half is None else repr(self.ci_half),
            self.binding_term,
            self.bottleneck,
        ]


def write_rows(path: str | Path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.as_csv())


def _q_of(policy: Policy) -> float | None:
    return policy.q if isinstance(policy, ProbLRU) else None


def bound_rows(spec: SweepSpec) -> list[ReportRow]:
    rows = []
    for policy in spec.policies:
        for disk in spec.disks_us:
            for mpl in spec.mpls:
                curve = bound_curve(policy, disk, mpl, list(spec.grid))
                for pt in curve.points:
                    rows.append(
                        ReportRow(
                            prong="bound",
                            policy=policy.name,
                            q=_q_of(policy),
                            disk_us=disk,
                            mpl=mpl,
                            p_hit=pt.p_hit,
                            throughput=pt.x_upper,
                            ci_half=None,
                            binding_term=pt.binding_term,
                            bottleneck=pt.bottleneck,
                        )
                    )
    return rows


def sim_rows(
    spec: SweepSpec,
    sim_config: SimConfig,
    parallel: int | None = None,
) -> list[ReportRow]:
    """replicate() at every (policy, disk, mpl, p); deterministic per spec.seed."""
    configs = []
    for policy in spec.policies:
        for disk in spec.disks_us:
            for mpl in spec.mpls:
                params = default_params(policy, disk_us=disk, mpl=mpl)
                for p in spec.grid:
                    configs.append((policy, disk, mpl, p, params))

    seeds = np.random.SeedSequence(spec.seed).generate_state(len(configs), np.uint64)

    def run(i):
        policy, disk, mpl, p, params = configs[i]
        net = build_network(policy, p, params, mpl)
        cfg = SimConfig(
            cycles=sim_config.cycles,
            warmup=sim_config.warmup,
            replications=sim_config.replications,
            seed=int(seeds[i]),
            distribution_override=sim_config.distribution_override,
        )
        return replicate(net, cfg)

    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            summaries = list(pool.map(run, range(len(configs))))
    else:
        summaries = [run(i) for i in range(len(configs))]

    rows = []
    for (policy, disk, mpl, p, _), summary in zip(configs, summaries):
        rows.append(
            ReportRow(
                prong="sim",
                policy=policy.name,
                q=_q_of(policy),
                disk_us=disk,
                mpl=mpl,
                p_hit=p,
                throughput=summary.mean_throughput,
                ci_half=summary.ci_half_width,
                binding_term="",
                bottleneck="",
            )
        )
    return rows
