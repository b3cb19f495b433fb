"""Trace-level policy lab: workloads, policy replay, calibration, estimators.

This is where the queueing models get their workload-dependent inputs: run
the actual eviction policies over Zipfian key traces, find the cache size
that realizes a target hit ratio, and measure the routing fractions the
segmented policies need (SLRU's T-hit fraction, S3-FIFO's ghost-admission
and promotion fractions, CLOCK's eviction scan depth).

Measurement protocol: the cache is warmed with two passes over a fill trace
("until full", then one more full pass), then statistics are taken over a
fresh evaluation trace drawn from an independent stream of the same seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import use_numba
from .policies import CLOCK, FIFO, LRU, S3FIFO, SLRU, FractionTable, Policy, ProbLRU
from .rng import state_for
from . import _trace_python


@dataclass(frozen=True)
class Workload:
    """I.i.d. Zipf(theta) draws over `universe` keys; P(rank k) ~ 1/k^theta."""

    universe: int = 100_000
    theta: float = 0.99
    length: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.universe < 1 or self.length < 1:
            raise ValueError("universe and length must be >= 1")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


def zipf_trace(workload: Workload, stream: int = 0) -> np.ndarray:
    """Generate the trace for one (seed, stream); key k has popularity rank k+1.

    Inverse-CDF sampling: binary search of uniforms against the precomputed
    cumulative rank weights.
    """
    ranks = np.arange(1, workload.universe + 1, dtype=np.float64)
    weights = ranks ** -workload.theta
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=workload.seed, spawn_key=(stream,))
    )
    u = rng.random(workload.length)
    keys = np.searchsorted(cdf, u, side="right")
    return np.minimum(keys, workload.universe - 1).astype(np.int64)


def save_trace(path: str | Path, trace: np.ndarray) -> None:
    """Newline-delimited decimal key ids."""
    np.savetxt(path, trace, fmt="%d")


def load_trace(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, dtype=np.int64, ndmin=1)


@dataclass(frozen=True)
class TraceStats:
    """Hit/miss outcome of one policy replay (measured window only)."""

    hits: int
    misses: int
    hit_ratio: float
    final_occupancy: int
    t_hit_fraction: float | None = None
    p_ghost: float | None = None
    p_m: float | None = None
    mean_scan_depth: float | None = None
    evictions: np.ndarray | None = field(default=None, repr=False, compare=False)


def min_capacity(policy: Policy) -> int:
    if isinstance(policy, CLOCK):
        return 4  # the eviction scan inspects the last four positions
    if isinstance(policy, S3FIFO):
        return 10  # keeps the 10% Small list non-empty
    if isinstance(policy, SLRU):
        return 2
    return 1


def slru_t_capacity(capacity: int, t_share: float = 0.8) -> int:
    """Protected-list size under the 80:20 split, leaving B at least one slot."""
    t_cap = int(capacity * t_share + 0.5)
    return min(max(t_cap, 0), capacity - 1)


def _kernels():
    if use_numba():
        from . import _trace_numba

        return _trace_numba
    return _trace_python


def run_policy(
    policy: Policy,
    capacity: int,
    trace: np.ndarray,
    universe: int | None = None,
    measure_from: int = 0,
    seed: int = 0,
    t_share: float = 0.8,
    keep_evictions: bool = False,
) -> TraceStats:
    """Replay `trace` against the policy at the given item capacity."""
    trace = np.ascontiguousarray(trace, dtype=np.int64)
    if trace.size == 0:
        raise ValueError("empty trace")
    if not (0 <= measure_from < trace.size):
        raise ValueError("measure_from must fall inside the trace")
    if universe is None:
        universe = int(trace.max()) + 1
    if capacity < min_capacity(policy):
        raise ValueError(
            f"{policy.name} needs capacity >= {min_capacity(policy)}, got {capacity}"
        )
    if capacity > universe and not isinstance(policy, S3FIFO):
        capacity = universe  # larger never changes behavior
    k = _kernels()

    t_frac = p_ghost = p_m = scan = None
    if isinstance(policy, LRU):
        hits, misses, occ, ev, n_ev = k.lru_kernel(trace, capacity, universe, measure_from)
    elif isinstance(policy, FIFO):
        hits, misses, occ, ev, n_ev = k.fifo_kernel(trace, capacity, universe, measure_from)
    elif isinstance(policy, ProbLRU):
        hits, misses, occ, ev, n_ev = k.problru_kernel(
            trace, capacity, universe, measure_from, policy.q, state_for(seed, 0xC01)
        )
    elif isinstance(policy, CLOCK):
        hits, misses, occ, scan_sum, scan_n, ev, n_ev = k.clock_kernel(
            trace, capacity, universe, measure_from
        )
        scan = scan_sum / scan_n if scan_n else None
    elif isinstance(policy, SLRU):
        t_cap = slru_t_capacity(capacity, t_share)
        hits, misses, occ, t_hits, ev, n_ev = k.slru_kernel(
            trace, capacity, t_cap, universe, measure_from
        )
        t_frac = t_hits / hits if hits else 0.0
    elif isinstance(policy, S3FIFO):
        hits, misses, occ, admits, stail, stail1, ev, n_ev = k.s3fifo_kernel(
            trace, capacity, universe, measure_from
        )
        p_ghost = admits / misses if misses else 0.0
        p_m = stail1 / stail if stail else 0.0
    else:
        raise TypeError(f"unsupported policy {policy!r}")

    total = hits + misses
    evictions = np.asarray(ev[:n_ev], dtype=np.int64) if keep_evictions else None
    return TraceStats(
        hits=int(hits),
        misses=int(misses),
        hit_ratio=hits / total if total else 0.0,
        final_occupancy=int(occ),
        t_hit_fraction=t_frac,
        p_ghost=p_ghost,
        p_m=p_m,
        mean_scan_depth=scan,
        evictions=evictions,
    )


# ---------------------------------------------------------------------------
# capacity calibration


@dataclass(frozen=True)
class CalibrationResult:
    capacity: int
    achieved: float
    converged: bool
    stats: TraceStats = field(repr=False, compare=False, default=None)


class _Replayer:
    """Warm-fill + evaluation harness reused across calibration probes."""

    def __init__(self, workload: Workload, eval_length: int | None = None):
        fill = zipf_trace(workload, stream=0)
        ev = zipf_trace(
            Workload(workload.universe, workload.theta, eval_length or workload.length,
                     workload.seed),
            stream=1,
        )
        self.keys = np.concatenate([fill, fill, ev])
        self.measure_from = 2 * fill.size
        self.universe = workload.universe
        self.seed = workload.seed

    def run(self, policy: Policy, capacity: int, t_share: float = 0.8) -> TraceStats:
        return run_policy(
            policy,
            capacity,
            self.keys,
            universe=self.universe,
            measure_from=self.measure_from,
            seed=self.seed,
            t_share=t_share,
        )


def calibrate_capacity(
    policy: Policy,
    workload: Workload,
    target: float,
    tolerance: float = 0.002,
    t_share: float = 0.8,
    replayer: _Replayer | None = None,
) -> CalibrationResult:
    """Bisect over item capacity until the evaluated hit ratio meets the target.

    Unreachable targets (above the full-universe ceiling or below the
    smallest cache's floor) return the best achievable capacity with
    converged=False.
    """
    if not (0.0 < target <= 1.0):
        raise ValueError("target hit ratio must lie in (0, 1]")
    if tolerance < 0.002:
        raise ValueError("tolerance below 0.002 is finer than run-to-run noise")
    r = replayer or _Replayer(workload)
    lo = min_capacity(policy)
    hi = workload.universe if not isinstance(policy, S3FIFO) else max(workload.universe, 10)

    best: tuple[float, int, TraceStats] | None = None

    def probe(cap: int) -> float:
        nonlocal best
        stats = r.run(policy, cap, t_share)
        gap = abs(stats.hit_ratio - target)
        if best is None or gap < best[0]:
            best = (gap, cap, stats)
        return stats.hit_ratio

    a_lo = probe(lo)
    if a_lo >= target:  # even the smallest cache overshoots: floor case
        return CalibrationResult(lo, a_lo, abs(a_lo - target) <= tolerance, best[2])
    a_hi = probe(hi)
    if a_hi <= target:  # ceiling case (cold misses cap the achievable ratio)
        return CalibrationResult(hi, a_hi, abs(a_hi - target) <= tolerance, best[2])

    while hi - lo > 1:
        mid = (lo + hi) // 2
        a = probe(mid)
        if abs(a - target) <= tolerance:
            return CalibrationResult(mid, a, True, best[2])
        if a < target:
            lo = mid
        else:
            hi = mid
    gap, cap, stats = best
    return CalibrationResult(cap, stats.hit_ratio, gap <= tolerance, stats)


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class EstimatorTable:
    """Rows of (achieved p_hit, measured values), CSV-round-trippable."""

    header: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([row[i] for row in self.rows])

    def fraction_table(self, name: str) -> FractionTable:
        return FractionTable(self.column("p_hit"), self.column(name))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header)
            for row in self.rows:
                w.writerow([repr(x) for x in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "EstimatorTable":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            rows = tuple(tuple(float(x) for x in row) for row in reader if row)
        return cls(header, rows)


def _collapse(points: list[tuple[float, ...]]) -> tuple[tuple[float, ...], ...]:
    """Sort by achieved p and average duplicate knots (targets can saturate)."""
    points.sort(key=lambda t: t[0])
    out: list[tuple[float, ...]] = []
    for pt in points:
        if out and abs(pt[0] - out[-1][0]) < 1e-9:
            prev = out.pop()
            merged = tuple((a + b) / 2 for a, b in zip(prev, pt))
            out.append(merged)
        else:
            out.append(pt)
    return tuple(out)


def _estimate(
    policy: Policy,
    workload: Workload,
    p_grid: list[float],
    columns: tuple[str, ...],
    extract,
    tolerance: float,
    t_share: float = 0.8,
) -> EstimatorTable:
    r = _Replayer(workload)
    points = []
    for target in p_grid:
        res = calibrate_capacity(
            policy, workload, target, tolerance=tolerance, t_share=t_share, replayer=r
        )
        values = extract(res.stats)
        if any(v is None for v in values):
            continue  # undefined at this point (e.g. no evictions at the ceiling)
        points.append((res.achieved,) + values)
    if not points:
        raise ValueError("estimation produced no usable grid points")
    return EstimatorTable(("p_hit",) + columns, _collapse(points))


def estimate_slru_t_fraction(
    workload: Workload,
    p_grid: list[float] | None = None,
    tolerance: float = 0.005,
    t_share: float = 0.8,
) -> EstimatorTable:
    """Measured fraction of SLRU hits landing on the protected list, per p_hit."""
    from .policies import default_p_grid

    grid = p_grid or default_p_grid()
    return _estimate(
        SLRU(),
        workload,
        grid,
        ("f_t",),
        lambda s: (s.t_hit_fraction,),
        tolerance,
        t_share,
    )


def estimate_s3fifo_params(
    workload: Workload,
    p_grid: list[float] | None = None,
    tolerance: float = 0.005,
) -> EstimatorTable:
    """Measured S3-FIFO ghost-admission and Small-tail promotion fractions."""
    from .policies import default_p_grid

    grid = p_grid or default_p_grid()
    return _estimate(
        S3FIFO(),
        workload,
        grid,
        ("p_ghost", "p_m"),
        lambda s: (s.p_ghost, s.p_m),
        tolerance,
    )


def clock_scan_profile(
    workload: Workload,
    p_grid: list[float] | None = None,
    tolerance: float = 0.005,
    monotone_slack: float = 0.05,
) -> EstimatorTable:
    """Mean CLOCK eviction scan depth per p_hit; checked non-decreasing."""
    from .policies import default_p_grid

    grid = p_grid or default_p_grid()
    table = _estimate(
        CLOCK(),
        workload,
        grid,
        ("mean_scan_depth",),
        lambda s: (s.mean_scan_depth,),
        tolerance,
    )
    depths = table.column("mean_scan_depth")
    drops = np.diff(depths)
    if np.any(drops < -monotone_slack):
        raise ValueError(f"scan-depth profile not non-decreasing: {depths}")
    return table
