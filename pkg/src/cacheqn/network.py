"""Closed queueing networks and their asymptotic throughput bounds.

A network describes one full request cycle as a probability tree of visit
sequences over two station classes: think stations (infinite-server, pure
delay) and FCFS single-server queue stations.  Operational analysis over the
tree yields per-station demands, the bottleneck, and the two-term upper
bound X <= min(N / (D + Z), 1 / Dmax).

Stations whose service mean is only known as an upper bound (tail updates)
contribute zero to the demand lower bound and are excluded from the
bottleneck argmax, so the bound stays a true upper bound; the simulator
serves them at the stored mean.

All times are in microseconds; throughput is requests per microsecond
(multiply by 1e6 for requests/second).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DETERMINISTIC = "deterministic"
EXPONENTIAL = "exponential"
BOUNDED_PARETO = "bounded-pareto"

_KINDS = (DETERMINISTIC, EXPONENTIAL, BOUNDED_PARETO)

POPULATION_LIMITED = "population-limited"
BOTTLENECK_LIMITED = "bottleneck-limited"


def bounded_pareto_mean(alpha: float, lower: float, upper: float) -> float:
    """Analytic mean of a Pareto(alpha) truncated to [lower, upper]."""
    if not (0 < lower < upper):
        raise ValueError("bounded-pareto needs 0 < lower < upper")
    if alpha <= 0:
        raise ValueError("bounded-pareto needs alpha > 0")
    if alpha == 1.0:
        return lower * math.log(upper / lower) / (1.0 - lower / upper)
    head = alpha * lower**alpha / (1.0 - (lower / upper) ** alpha)
    return head * (upper ** (1.0 - alpha) - lower ** (1.0 - alpha)) / (1.0 - alpha)


@dataclass(frozen=True)
class ServiceDist:
    """Service/think time distribution with a pinned mean (microseconds)."""

    kind: str
    mean: float
    alpha: float = 0.0
    lower: float = 0.0
    upper: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.mean < 0:
            raise ValueError("mean must be >= 0")
        if self.kind == BOUNDED_PARETO:
            analytic = bounded_pareto_mean(self.alpha, self.lower, self.upper)
            if abs(analytic - self.mean) > 1e-6 * analytic:
                raise ValueError(
                    f"stored mean {self.mean} != analytic mean {analytic}"
                )

    @classmethod
    def deterministic(cls, mean: float) -> "ServiceDist":
        return cls(DETERMINISTIC, float(mean))

    @classmethod
    def exponential(cls, mean: float) -> "ServiceDist":
        return cls(EXPONENTIAL, float(mean))

    @classmethod
    def bounded_pareto(cls, alpha: float, lower: float, upper: float) -> "ServiceDist":
        mean = bounded_pareto_mean(alpha, lower, upper)
        return cls(BOUNDED_PARETO, mean, float(alpha), float(lower), float(upper))

    @classmethod
    def bounded_pareto_with_mean(cls, alpha: float, ratio: float, mean: float) -> "ServiceDist":
        """Bounded Pareto with upper/lower = ratio, range scaled to hit `mean`."""
        base = bounded_pareto_mean(alpha, 1.0, ratio)
        lo = mean / base
        return cls.bounded_pareto(alpha, lo, lo * ratio)

    def scaled(self, c: float) -> "ServiceDist":
        if self.kind == BOUNDED_PARETO:
            return ServiceDist.bounded_pareto(self.alpha, self.lower * c, self.upper * c)
        return ServiceDist(self.kind, self.mean * c)


@dataclass(frozen=True)
class Visit:
    """One stop in a request path.

    `think` visits are pure delay (infinite-server); queue visits wait in a
    per-station FCFS line.  `mean_is_upper_bound` marks stations whose true
    mean is only known to lie in (0, service.mean]; bound math treats their
    demand as the interval [0, p * mean].
    """

    station: str
    service: ServiceDist
    think: bool = False
    mean_is_upper_bound: bool = False

    def __post_init__(self):
        if self.think and self.mean_is_upper_bound:
            raise ValueError("interval means only apply to queue stations")


@dataclass(frozen=True)
class PathBranch:
    """A probability-weighted visit sequence, optionally fanning out further."""

    probability: float
    visits: tuple[Visit, ...] = ()
    children: tuple["PathBranch", ...] = ()

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0):
            raise ValueError(f"branch probability {self.probability} outside [0, 1]")


@dataclass(frozen=True)
class ClosedNetwork:
    """A request cycle (probability tree of branches) plus the MPL."""

    mpl: int
    branches: tuple[PathBranch, ...]
    label: str = ""

    def __post_init__(self):
        if self.mpl < 1:
            raise ValueError("mpl must be >= 1")
        _check_sibling_sums(self.branches)

    def leaves(self) -> list[tuple[float, tuple[Visit, ...]]]:
        """Flatten to (probability, visit sequence) root-to-leaf paths."""
        out: list[tuple[float, tuple[Visit, ...]]] = []

        def walk(branches, prob, visits):
            for b in branches:
                p = prob * b.probability
                v = visits + b.visits
                if b.children:
                    walk(b.children, p, v)
                else:
                    out.append((p, v))

        walk(self.branches, 1.0, ())
        return out

    def stations(self) -> list[tuple[str, bool]]:
        """(name, is_think) in canonical order: first appearance in the tree."""
        seen: dict[str, bool] = {}
        for _, visits in self.leaves():
            for v in visits:
                if v.station not in seen:
                    seen[v.station] = v.think
                elif seen[v.station] != v.think:
                    raise ValueError(f"station {v.station!r} is both think and queue")
        return list(seen.items())

    def scaled(self, c: float) -> "ClosedNetwork":
        """All service and think means multiplied by c (for scaling checks)."""
        if c <= 0:
            raise ValueError("scale factor must be positive")

        def scale_branch(b: PathBranch) -> PathBranch:
            return PathBranch(
                b.probability,
                tuple(
                    Visit(v.station, v.service.scaled(c), v.think, v.mean_is_upper_bound)
                    for v in b.visits
                ),
                tuple(scale_branch(ch) for ch in b.children),
            )

        return ClosedNetwork(self.mpl, tuple(scale_branch(b) for b in self.branches), self.label)


def _check_sibling_sums(branches: tuple[PathBranch, ...], where: str = "root"):
    if not branches:
        raise ValueError(f"empty branch set at {where}")
    total = sum(b.probability for b in branches)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"sibling probabilities at {where} sum to {total}, not 1")
    for i, b in enumerate(branches):
        if b.children:
            _check_sibling_sums(b.children, where=f"{where}/{i}")


def check_single_lookup(net: ClosedNetwork, station: str = "cache-lookup"):
    """Every leaf path must contain the cache-lookup think visit exactly once."""
    for prob, visits in net.leaves():
        n = sum(1 for v in visits if v.station == station and v.think)
        if n != 1:
            raise ValueError(
                f"leaf (p={prob}) visits {station!r} {n} times, expected exactly once"
            )


@dataclass(frozen=True)
class StationDemand:
    station: str
    lo: float
    hi: float
    interval: bool  # True when only the upper bound of the mean is known


@dataclass(frozen=True)
class DemandProfile:
    """Per-queue-station demands, totals, bottleneck, and the think time Z."""

    per_station: tuple[StationDemand, ...]
    total_lo: float
    total_hi: float
    dmax: float
    bottleneck: str
    think_time: float

    def demand(self, station: str) -> StationDemand:
        for d in self.per_station:
            if d.station == station:
                return d
        raise KeyError(station)


@dataclass(frozen=True)
class BoundResult:
    x_upper: float
    binding_term: str
    dmax: float
    think_time: float
    demand: DemandProfile = field(repr=False, default=None)


def mean_think_time(net: ClosedNetwork) -> float:
    """Expected time per cycle spent at think stations (path-probability weighted)."""
    z = 0.0
    for prob, visits in net.leaves():
        for v in visits:
            if v.think:
                z += prob * v.service.mean
    return z


def device_demands(net: ClosedNetwork) -> DemandProfile:
    """Per-station expected demand per request, with intervals for bound-only means.

    The bottleneck is the argmax over stations with known means (interval
    stations enter at their lower bound 0 and so never win); ties go to the
    first station in canonical order.
    """
    order: list[str] = []
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    interval: dict[str, bool] = {}
    z = 0.0
    for prob, visits in net.leaves():
        for v in visits:
            if v.think:
                z += prob * v.service.mean
                continue
            s = v.station
            if s not in lo:
                order.append(s)
                lo[s] = 0.0
                hi[s] = 0.0
                interval[s] = False
            contribution = prob * v.service.mean
            hi[s] += contribution
            if v.mean_is_upper_bound:
                interval[s] = True
            else:
                lo[s] += contribution

    per = tuple(StationDemand(s, lo[s], hi[s], interval[s]) for s in order)
    dmax = 0.0
    bottleneck = ""
    for d in per:
        if not d.interval and d.lo > dmax:
            dmax = d.lo
            bottleneck = d.station
    if not bottleneck:
        # all stations interval-valued (or none at all): fall back to canonical first
        bottleneck = order[0] if order else ""
    return DemandProfile(
        per_station=per,
        total_lo=sum(d.lo for d in per),
        total_hi=sum(d.hi for d in per),
        dmax=dmax,
        bottleneck=bottleneck,
        think_time=z,
    )


def throughput_upper_bound(net: ClosedNetwork) -> BoundResult:
    """Two-term asymptotic bound min(N/(D+Z), 1/Dmax) in requests per microsecond.

    Uses the demand lower bound, so the result upper-bounds the true
    throughput for any tail-update mean inside its interval.
    """
    prof = device_demands(net)
    if prof.total_lo + prof.think_time <= 0.0:
        raise ValueError("network has zero demand and think time; no finite bound")
    population = net.mpl / (prof.total_lo + prof.think_time)
    bottleneck = 1.0 / prof.dmax if prof.dmax > 0 else math.inf
    if population <= bottleneck:
        return BoundResult(population, POPULATION_LIMITED, prof.dmax, prof.think_time, prof)
    return BoundResult(bottleneck, BOTTLENECK_LIMITED, prof.dmax, prof.think_time, prof)


def sample_service(dist: ServiceDist, rng: np.random.Generator) -> float:
    """Draw one service time; deterministic draws consume no randomness."""
    if dist.kind == DETERMINISTIC:
        return dist.mean
    if dist.kind == EXPONENTIAL:
        return -dist.mean * math.log(1.0 - rng.random())
    # inverse CDF of the truncated Pareto
    u = rng.random()
    frac = 1.0 - (dist.lower / dist.upper) ** dist.alpha
    return dist.lower / (1.0 - u * frac) ** (1.0 / dist.alpha)
