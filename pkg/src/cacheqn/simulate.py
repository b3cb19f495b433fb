"""Event-driven simulation of closed networks.

N jobs cycle forever: sample a leaf path by the branch probabilities, serve
think visits as pure delay, wait FCFS at each queue visit.  Throughput is
measured completions over measured time after a warmup, with replication
over independent RNG streams for Student-t confidence intervals.

Backend: a numba kernel or its pure-Python twin (see `backend`); both
consume the same flattened network arrays and a counter-derived
xoshiro256** stream per replication, so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _sim_python
from .backend import use_numba
from .network import (
    BOUNDED_PARETO,
    DETERMINISTIC,
    EXPONENTIAL,
    ClosedNetwork,
    ServiceDist,
)
from .rng import state_for

_KIND_CODE = {DETERMINISTIC: 0, EXPONENTIAL: 1, BOUNDED_PARETO: 2}

# override Pareto keeps the measured shape (alpha 0.45, 12x range), rescaled
_OVERRIDE_BP_ALPHA = 0.45
_OVERRIDE_BP_RATIO = 12.0


@dataclass(frozen=True)
class SimConfig:
    """cycles/warmup are counted in completed request cycles."""

    cycles: int = 200_000
    warmup: int | None = None
    replications: int = 20
    seed: int = 0
    distribution_override: str | None = None  # applied to queue stations only
    debug: bool = False
    # start each job's first cycle at its first queue visit instead of the
    # path start: bottleneck queues then begin near their steady level, which
    # shrinks the initial transient that warmup must erase at near-critical
    # cells.  Initial conditions are free; the stationary quantities measured
    # are the same.
    hot_start: bool = False

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.warmup is not None and not (0 <= self.warmup < self.cycles):
            raise ValueError("warmup must satisfy 0 <= warmup < cycles")
        if self.distribution_override is not None and self.distribution_override not in _KIND_CODE:
            raise ValueError(f"unknown distribution override {self.distribution_override!r}")

    def effective_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        w = max(5000, self.cycles // 10)
        return w if w < self.cycles else self.cycles // 10


@dataclass(frozen=True)
class StationStats:
    utilization: float
    mean_queue_length: float
    completions: int


@dataclass(frozen=True)
class SimResult:
    throughput: float  # requests per microsecond
    mean_response_time: float  # queue wait + service per cycle
    mean_think_time: float
    mean_cycle_time: float
    per_station: dict[str, StationStats]
    simulated_time: float
    cycles: int
    total_cycles: int
    mpl: int
    conservation_violations: int = 0
    queue_jobs_start: int = 0  # jobs at queue stations when measuring began
    queue_jobs_end: int = 0

    @property
    def queue_drift(self) -> int:
        """Net queue-population change across the window; a convergence
        diagnostic (large drift means the run was still settling)."""
        return abs(self.queue_jobs_end - self.queue_jobs_start)


@dataclass(frozen=True)
class SimSummary:
    mean_throughput: float
    ci_half_width: float
    results: tuple[SimResult, ...] = field(repr=False, default=())

    @property
    def throughputs(self) -> np.ndarray:
        return np.array([r.throughput for r in self.results])


class _Plan:
    """Network flattened into the arrays both kernel lanes consume."""

    def __init__(self, net: ClosedNetwork, override: str | None):
        leaves = net.leaves()
        if not leaves:
            raise ValueError("network has no paths")
        station_index: dict[str, int] = {}
        for name, think in net.stations():
            if not think:
                station_index[name] = len(station_index)

        v_station: list[int] = []
        v_kind: list[int] = []
        v_p0: list[float] = []
        v_p1: list[float] = []
        v_p2: list[float] = []
        leaf_start = [0]
        probs = []
        expected_cycle = 0.0
        for prob, visits in leaves:
            if prob > 0.0 and not visits:
                raise ValueError("positive-probability leaf with no visits")
            for v in visits:
                dist = v.service
                if override is not None and not v.think:
                    dist = _override_dist(override, dist.mean)
                v_station.append(-1 if v.think else station_index[v.station])
                v_kind.append(_KIND_CODE[dist.kind])
                if dist.kind == BOUNDED_PARETO:
                    v_p0.append(dist.lower)
                    v_p1.append(1.0 - (dist.lower / dist.upper) ** dist.alpha)
                    v_p2.append(1.0 / dist.alpha)
                else:
                    v_p0.append(dist.mean)
                    v_p1.append(0.0)
                    v_p2.append(0.0)
                expected_cycle += prob * dist.mean
            leaf_start.append(len(v_station))
            probs.append(prob)
        if expected_cycle <= 0.0:
            raise ValueError("network has zero expected cycle time; nothing to simulate")

        self.leaf_cum = np.cumsum(np.array(probs, dtype=np.float64))
        self.leaf_start = np.array(leaf_start, dtype=np.int64)
        self.v_station = np.array(v_station, dtype=np.int64)
        self.v_kind = np.array(v_kind, dtype=np.uint8)
        self.v_p0 = np.array(v_p0, dtype=np.float64)
        self.v_p1 = np.array(v_p1, dtype=np.float64)
        self.v_p2 = np.array(v_p2, dtype=np.float64)
        self.stations = list(station_index)
        self.visit_prob = _visit_probabilities(leaves, self.stations)


def _override_dist(kind: str, mean: float) -> ServiceDist:
    if mean == 0.0:
        return ServiceDist.deterministic(0.0)
    if kind == DETERMINISTIC:
        return ServiceDist.deterministic(mean)
    if kind == EXPONENTIAL:
        return ServiceDist.exponential(mean)
    return ServiceDist.bounded_pareto_with_mean(_OVERRIDE_BP_ALPHA, _OVERRIDE_BP_RATIO, mean)


def _visit_probabilities(leaves, stations) -> dict[str, float]:
    out = {s: 0.0 for s in stations}
    for prob, visits in leaves:
        for v in visits:
            if not v.think:
                out[v.station] += prob
    return out


def _kernel():
    if use_numba():
        from . import _sim_numba

        return _sim_numba.sim_kernel
    return _sim_python.sim_kernel


def simulate(
    net: ClosedNetwork,
    config: SimConfig,
    replication_index: int = 0,
) -> SimResult:
    """One replication; the RNG stream is derived from (seed, replication_index)."""
    plan = _Plan(net, config.distribution_override)
    warmup = config.effective_warmup()
    state = state_for(config.seed, replication_index)
    stats, st_comp, st_busy, st_area = _kernel()(
        plan.leaf_cum,
        plan.leaf_start,
        plan.v_station,
        plan.v_kind,
        plan.v_p0,
        plan.v_p1,
        plan.v_p2,
        len(plan.stations),
        net.mpl,
        warmup,
        config.cycles,
        state,
        config.debug,
        config.hot_start,
    )
    t0, t1 = float(stats[0]), float(stats[1])
    meas = int(stats[2])
    span = t1 - t0
    if span <= 0.0:
        raise ValueError("measurement window has zero length; increase cycles")
    per = {
        name: StationStats(
            utilization=float(st_busy[i]) / span,
            mean_queue_length=float(st_area[i]) / span,
            completions=int(st_comp[i]),
        )
        for i, name in enumerate(plan.stations)
    }
    return SimResult(
        throughput=meas / span,
        mean_response_time=float(stats[3]) / meas,
        mean_think_time=float(stats[4]) / meas,
        mean_cycle_time=float(stats[5]) / meas,
        per_station=per,
        simulated_time=span,
        cycles=meas,
        total_cycles=int(stats[6]),
        mpl=net.mpl,
        conservation_violations=int(stats[7]),
        queue_jobs_start=int(stats[8]),
        queue_jobs_end=int(stats[9]),
    )


def replicate(
    net: ClosedNetwork,
    config: SimConfig,
    parallel: int | None = None,
) -> SimSummary:
    """Run config.replications independent streams and a Student-t 95% CI."""
    n = config.replications
    if n < 2:
        raise ValueError("replications must be >= 2 for a confidence interval")
    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(lambda i: simulate(net, config, i), range(n)))
    else:
        results = [simulate(net, config, i) for i in range(n)]
    xs = np.array([r.throughput for r in results])
    mean = float(xs.mean())
    if xs.max() == xs.min():  # deterministic system: exact zero-width interval
        mean = float(xs[0])
        sd = 0.0
    else:
        sd = float(xs.std(ddof=1))
    ci = student_t_975(n - 1) * sd / math.sqrt(n)
    return SimSummary(mean_throughput=mean, ci_half_width=ci, results=tuple(results))


def student_t_975(df: int) -> float:
    from scipy.stats import t

    return float(t.ppf(0.975, df))


def verify_response_time_law(result: SimResult, net: ClosedNetwork | None = None) -> float:
    """Relative residual of N/X = E[R] + E[Z] on a finished run."""
    n = net.mpl if net is not None else result.mpl
    lhs = n / result.throughput
    rhs = result.mean_response_time + result.mean_think_time
    return abs(lhs - rhs) / lhs
