"""Per-policy network builders, closed-form bounds, knee finder, classifier.

Six eviction policies are modeled.  On a hit, LRU-family policies mutate the
global linked list (delink + head update); FIFO-family policies touch
nothing.  The builders encode each policy's hit/miss branch structure with
the measured service means, so the generic bound engine in `network` can
evaluate any of them; the printed closed forms exist for LRU, FIFO, and
CLOCK and are checked against the generic engine to 1e-9.

Default service means (microseconds, measured under bottleneck conditions):

    cache lookup think 0.51         disk think 5 / 100 / 500
    LRU   delink 0.70, head 0.59, tail bounded by head
    FIFO  head 0.73 (two queues share the MPL, so longer queues), tail bounded
    CLOCK head bounded by 0.65, tail 0.65 + 0.3 * g(p_hit) with
          g(x) = 2.43e-5 * exp(11.24 x) + 0.187  (eviction scan overhead)
    SLRU  reuses LRU's numbers per segment; S3-FIFO reuses CLOCK's numbers
          plus a ghost-lookup think of 0.51

SLRU and S3-FIFO additionally need workload-dependent routing fractions
(f_T, p_ghost, p_M); these come from trace-level estimation (`tracelab`)
either as interpolation tables or as constants.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .network import (
    ClosedNetwork,
    PathBranch,
    ServiceDist,
    Visit,
    check_single_lookup,
    throughput_upper_bound,
)

LRU_LIKE = "LRU-like"
FIFO_LIKE = "FIFO-like"

STANDARD_DISKS_US = (5.0, 100.0, 500.0)


def clock_g(p_hit: float) -> float:
    """CLOCK eviction-scan overhead multiplier at hit ratio p_hit."""
    if not (0.0 <= p_hit <= 1.0):
        raise ValueError(f"p_hit {p_hit} outside [0, 1]")
    return 2.43e-5 * math.exp(11.24 * p_hit) + 0.187


def default_p_grid() -> list[float]:
    """Hit-ratio grid 0.40..0.90 step 0.05, then 0.90..1.00 step 0.02."""
    grid = [round(0.40 + 0.05 * i, 2) for i in range(11)]
    grid += [round(0.92 + 0.02 * i, 2) for i in range(5)]
    return grid


class FractionTable:
    """Piecewise-linear fraction-of-p_hit lookup, clamped outside the knots."""

    def __init__(self, p: np.ndarray, value: np.ndarray):
        p = np.asarray(p, dtype=float)
        value = np.asarray(value, dtype=float)
        if p.ndim != 1 or p.shape != value.shape or p.size < 1:
            raise ValueError("table needs matching 1-d p and value arrays")
        if np.any(np.diff(p) <= 0):
            raise ValueError("table p knots must be strictly increasing")
        if np.any((value < 0) | (value > 1)):
            raise ValueError("fractions must lie in [0, 1]")
        self.p = p
        self.value = value

    def __call__(self, p_hit: float) -> float:
        return float(np.interp(p_hit, self.p, self.value))

    def __repr__(self):
        return f"FractionTable({len(self.p)} knots, p {self.p[0]:.3f}..{self.p[-1]:.3f})"


FractionSource = float | FractionTable


def _resolve_fraction(source: FractionSource, p_hit: float, what: str) -> float:
    if source is None:
        raise ValueError(f"{what} requires a fraction source (table or constant)")
    f = source(p_hit) if isinstance(source, FractionTable) else float(source)
    if not (0.0 <= f <= 1.0):
        raise ValueError(f"{what} fraction {f} outside [0, 1]")
    return f


def _load_table(filename: str, column: str) -> FractionTable:
    ref = resources.files("cacheqn.data").joinpath(filename)
    with ref.open("r", newline="") as fh:
        rows = list(csv.DictReader(fh))
    p = np.array([float(r["p_hit"]) for r in rows])
    v = np.array([float(r[column]) for r in rows])
    return FractionTable(p, v)


# ---------------------------------------------------------------------------
# policies


@dataclass(frozen=True)
class Policy:
    name = "policy"


@dataclass(frozen=True)
class LRU(Policy):
    name = "lru"


@dataclass(frozen=True)
class FIFO(Policy):
    name = "fifo"


@dataclass(frozen=True)
class CLOCK(Policy):
    name = "clock"


@dataclass(frozen=True)
class ProbLRU(Policy):
    """Skips the hit-path list update with probability q."""

    q: float = 0.5
    name = "problru"

    def __post_init__(self):
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"q {self.q} outside [0, 1]")


@dataclass(frozen=True)
class SLRU(Policy):
    """Segmented LRU; t_fraction(p_hit) = fraction of hits found on the protected list."""

    t_fraction: FractionSource = None
    name = "slru"

    @classmethod
    def with_default_table(cls) -> "SLRU":
        return cls(t_fraction=_load_table("slru_ft_default.csv", "f_t"))


@dataclass(frozen=True)
class S3FIFO(Policy):
    """Small/Main segmented FIFO with a ghost of recent misses.

    p_ghost(p_hit): fraction of misses the ghost admits straight to Main;
    p_m(p_hit): fraction of Small-tail evictions promoted to Main (bit set).
    """

    p_ghost: FractionSource = None
    p_m: FractionSource = None
    name = "s3fifo"

    @classmethod
    def with_default_table(cls) -> "S3FIFO":
        return cls(
            p_ghost=_load_table("s3fifo_fractions_default.csv", "p_ghost"),
            p_m=_load_table("s3fifo_fractions_default.csv", "p_m"),
        )


POLICY_NAMES = ("lru", "fifo", "problru", "clock", "slru", "s3fifo")


def policy_from_name(name: str, q: float = 0.5) -> Policy:
    """CLI helper: build a policy (SLRU/S3-FIFO get the packaged default tables)."""
    name = name.strip().lower()
    if name == "lru":
        return LRU()
    if name == "fifo":
        return FIFO()
    if name == "clock":
        return CLOCK()
    if name == "problru":
        return ProbLRU(q=q)
    if name == "slru":
        return SLRU.with_default_table()
    if name == "s3fifo":
        return S3FIFO.with_default_table()
    raise ValueError(f"unknown policy {name!r} (choose from {POLICY_NAMES})")


# ---------------------------------------------------------------------------
# service parameters


@dataclass(frozen=True)
class ServiceParams:
    """Measured means (microseconds) for one policy's stations.

    `head_is_bound` / tail handling mirror the measurement reality: the mean
    of a station that can never be flooded is only an upper bound, so bound
    math uses 0 for it while the simulator serves it at the stored value.
    A `tail` / segment value of None defaults to the matching head mean.
    """

    z_cache: float = 0.51
    z_disk: float = 100.0
    z_ghost: float = 0.51
    delink: float = 0.7
    head: float = 0.59
    tail: float | None = None
    head_is_bound: bool = False
    clock_tail_base: float = 0.65
    clock_tail_scan: float = 0.3

    def tail_mean(self) -> float:
        return self.head if self.tail is None else self.tail

    def clock_tail(self, p_hit: float) -> float:
        return self.clock_tail_base + self.clock_tail_scan * clock_g(p_hit)

    def scaled(self, c: float) -> "ServiceParams":
        return ServiceParams(
            z_cache=self.z_cache * c,
            z_disk=self.z_disk * c,
            z_ghost=self.z_ghost * c,
            delink=self.delink * c,
            head=self.head * c,
            tail=None if self.tail is None else self.tail * c,
            head_is_bound=self.head_is_bound,
            clock_tail_base=self.clock_tail_base * c,
            clock_tail_scan=self.clock_tail_scan * c,
        )


def default_params(policy: Policy, disk_us: float = 100.0, mpl: int = 72) -> ServiceParams:
    """Measured default service means per policy (see the module docstring).

    ProbLRU inherits LRU's means below q = 1 - 1/mpl and FIFO's head mean at
    or above it (where its routing degenerates to FIFO and queue lengths, and
    with them the head-update communication cost, match FIFO's).
    """
    if isinstance(policy, (LRU, SLRU)):
        return ServiceParams(z_disk=disk_us, delink=0.7, head=0.59)
    if isinstance(policy, FIFO):
        return ServiceParams(z_disk=disk_us, head=0.73)
    if isinstance(policy, (CLOCK, S3FIFO)):
        return ServiceParams(z_disk=disk_us, head=0.65, head_is_bound=True)
    if isinstance(policy, ProbLRU):
        if policy.q >= 1.0 - 1.0 / mpl:
            return ServiceParams(z_disk=disk_us, delink=0.7, head=0.73)
        return ServiceParams(z_disk=disk_us, delink=0.7, head=0.59)
    raise TypeError(f"unsupported policy {policy!r}")


# ---------------------------------------------------------------------------
# network builders


# Visits are immutable, so identical (station, mean) pairs are shared; knee
# scans rebuild networks at ~1e3 grid points and this keeps them cheap.
@lru_cache(maxsize=16384)
def _think(station: str, mean: float) -> Visit:
    return Visit(station, ServiceDist.exponential(mean), think=True)


@lru_cache(maxsize=16384)
def _queue(station: str, mean: float, bound_only: bool = False) -> Visit:
    return Visit(station, ServiceDist.exponential(mean), mean_is_upper_bound=bound_only)


def build_network(
    policy: Policy,
    p_hit: float,
    params: ServiceParams | None = None,
    mpl: int = 72,
) -> ClosedNetwork:
    """The policy's closed network at hit ratio p_hit.

    Hit paths: LRU {delink, head}; FIFO/CLOCK/S3-FIFO {} (bit flips are free);
    ProbLRU flips a q-coin between the two; SLRU splits T-hits {delinkT,
    headT} from B-hits {delinkB, headT, tailT, headB} by f_T.  Miss paths all
    read the disk then update tail/head of the receiving list; S3-FIFO first
    consults the ghost and routes to Main or Small (with p_M of Small-tail
    victims promoted onward to Main).
    """
    if not (0.0 <= p_hit <= 1.0):
        raise ValueError(f"p_hit {p_hit} outside [0, 1]")
    if mpl < 1:
        raise ValueError("mpl must be >= 1")
    if params is None:
        params = default_params(policy, mpl=mpl)
    p = float(p_hit)
    miss = 1.0 - p
    lookup = _think("cache-lookup", params.z_cache)
    disk = _think("disk", params.z_disk)

    if isinstance(policy, LRU):
        branches = (
            PathBranch(p, (lookup, _queue("delink", params.delink), _queue("head", params.head))),
            PathBranch(
                miss,
                (lookup, disk, _queue("tail", params.tail_mean(), bound_only=True),
                 _queue("head", params.head)),
            ),
        )
        label = f"lru p={p:g}"

    elif isinstance(policy, FIFO):
        branches = (
            PathBranch(p, (lookup,)),
            PathBranch(
                miss,
                (lookup, disk, _queue("tail", params.tail_mean(), bound_only=True),
                 _queue("head", params.head)),
            ),
        )
        label = f"fifo p={p:g}"

    elif isinstance(policy, ProbLRU):
        q = policy.q
        branches = (
            PathBranch(
                p,
                (lookup,),
                children=(
                    PathBranch(q),
                    PathBranch(
                        1.0 - q,
                        (_queue("delink", params.delink), _queue("head", params.head)),
                    ),
                ),
            ),
            PathBranch(
                miss,
                (lookup, disk, _queue("tail", params.tail_mean(), bound_only=True),
                 _queue("head", params.head)),
            ),
        )
        label = f"problru q={q:g} p={p:g}"

    elif isinstance(policy, CLOCK):
        branches = (
            PathBranch(p, (lookup,)),
            PathBranch(
                miss,
                (lookup, disk, _queue("tail", params.clock_tail(p)),
                 _queue("head", params.head, bound_only=params.head_is_bound)),
            ),
        )
        label = f"clock p={p:g}"

    elif isinstance(policy, SLRU):
        f_t = _resolve_fraction(policy.t_fraction, p, "SLRU")
        t_hit = (
            _queue("delinkT", params.delink),
            _queue("headT", params.head),
        )
        # A B-hit promotes to T; the overflowing T tail is demoted back onto B.
        b_hit = (
            _queue("delinkB", params.delink),
            _queue("tailT", params.tail_mean(), bound_only=True),
            _queue("headT", params.head),
            _queue("headB", params.head),
        )
        branches = (
            PathBranch(
                p,
                (lookup,),
                children=(PathBranch(f_t, t_hit), PathBranch(1.0 - f_t, b_hit)),
            ),
            PathBranch(
                miss,
                (lookup, disk, _queue("tailB", params.tail_mean(), bound_only=True),
                 _queue("headB", params.head)),
            ),
        )
        label = f"slru f_T={f_t:.3f} p={p:g}"

    elif isinstance(policy, S3FIFO):
        p_ghost = _resolve_fraction(policy.p_ghost, p, "S3-FIFO p_ghost")
        p_m = _resolve_fraction(policy.p_m, p, "S3-FIFO p_M")
        tail = params.clock_tail(p)
        to_main = (
            _queue("headM", params.head, bound_only=params.head_is_bound),
            _queue("tailM", tail),
        )
        branches = (
            PathBranch(p, (lookup,)),
            PathBranch(
                miss,
                (lookup, disk, _think("ghost", params.z_ghost)),
                children=(
                    PathBranch(p_ghost, to_main),
                    PathBranch(
                        1.0 - p_ghost,
                        (_queue("headS", params.head, bound_only=params.head_is_bound),
                         _queue("tailS", tail)),
                        children=(PathBranch(p_m, to_main), PathBranch(1.0 - p_m)),
                    ),
                ),
            ),
        )
        label = f"s3fifo pg={p_ghost:.3f} pm={p_m:.3f} p={p:g}"

    else:
        raise TypeError(f"unsupported policy {policy!r}")

    net = ClosedNetwork(mpl=mpl, branches=branches, label=label)
    check_single_lookup(net)
    return net


# ---------------------------------------------------------------------------
# closed-form bounds (printed formulas)


def closed_form_bound(policy: Policy, p_hit: float, disk_us: float, mpl: int = 72) -> float:
    """Directly evaluated throughput upper bound for LRU, FIFO, or CLOCK.

    Evaluates the published piecewise expressions for the standard disk
    latencies and the same recipe (demand lower bound + think time) for any
    other latency.  Other policies have no printed closed form; use
    throughput_upper_bound(build_network(...)).
    """
    if not (0.0 <= p_hit <= 1.0):
        raise ValueError(f"p_hit {p_hit} outside [0, 1]")
    p = float(p_hit)
    n = float(mpl)

    if isinstance(policy, LRU):
        if disk_us == 100.0:
            denom = 101.1 - 99.3 * p
        elif disk_us == 5.0:
            denom = 6.1 - 4.3 * p
        elif disk_us == 500.0:
            denom = 501.1 - 499.3 * p
        else:
            denom = 0.7 * p + 0.59 + 0.51 + disk_us * (1.0 - p)
        return min(n / denom, 1.0 / max(0.59, 0.7 * p))

    if isinstance(policy, FIFO):
        if disk_us == 100.0:
            denom = 101.24 - 100.73 * p
        elif disk_us == 5.0:
            denom = 6.24 - 5.73 * p
        elif disk_us == 500.0:
            denom = 501.24 - 500.73 * p
        else:
            denom = 0.73 * (1.0 - p) + 0.51 + disk_us * (1.0 - p)
        dmax = 0.73 - 0.73 * p
        return n / denom if dmax == 0.0 else min(n / denom, 1.0 / dmax)

    if isinstance(policy, CLOCK):
        g = clock_g(p)
        if disk_us == 100.0:
            denom = 101.16 + 0.3 * g - (100.65 + 0.3 * g) * p
        else:
            denom = (1.0 - p) * (0.65 + 0.3 * g) + 0.51 + disk_us * (1.0 - p)
        dmax = (1.0 - p) * (0.65 + 0.3 * g)
        return n / denom if dmax == 0.0 else min(n / denom, 1.0 / dmax)

    raise ValueError(
        f"no printed closed form for {policy.name}; use the generic bound engine"
    )


# ---------------------------------------------------------------------------
# curves, knees, classification


@dataclass(frozen=True)
class BoundPoint:
    p_hit: float
    x_upper: float
    binding_term: str
    bottleneck: str


@dataclass(frozen=True)
class BoundCurve:
    policy: str
    disk_us: float
    mpl: int
    points: tuple[BoundPoint, ...]

    def x(self) -> np.ndarray:
        return np.array([pt.x_upper for pt in self.points])

    def p(self) -> np.ndarray:
        return np.array([pt.p_hit for pt in self.points])


def bound_curve(
    policy: Policy,
    disk_us: float,
    mpl: int = 72,
    grid: list[float] | None = None,
) -> BoundCurve:
    """Evaluate the generic bound over a hit-ratio grid (default: the sweep grid)."""
    if grid is None:
        grid = default_p_grid()
    grid = [float(p) for p in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("p grid must be strictly increasing")
    params = default_params(policy, disk_us=disk_us, mpl=mpl)
    points = []
    for p in grid:
        res = throughput_upper_bound(build_network(policy, p, params, mpl))
        points.append(BoundPoint(p, res.x_upper, res.binding_term, res.demand.bottleneck))
    return BoundCurve(policy.name, disk_us, mpl, tuple(points))


@dataclass(frozen=True)
class KneeResult:
    """Where a bound curve stops improving.

    decrease_start: smallest grid p after which the curve strictly decreases
    all the way to the end of the scanned range (None if the curve still
    rises somewhere near the top).  plateau_start: smallest p after which it
    never strictly increases again (flat-then-falling curves plateau first).
    """

    decrease_start: float | None
    plateau_start: float | None

    @property
    def knee(self) -> float | None:
        return self.decrease_start


_REL_EPS = 1e-9  # treats float jitter on analytically flat segments as "equal"


def hit_ratio_knee(
    policy: Policy,
    disk_us: float,
    mpl: int = 72,
    lo: float = 0.0,
    hi: float = 1.0,
    step: float = 1e-3,
) -> KneeResult:
    """Scan the generic bound on a fine grid for the throughput knee."""
    n = int(round((hi - lo) / step))
    grid = [lo + (hi - lo) * i / n for i in range(n + 1)]
    params = default_params(policy, disk_us=disk_us, mpl=mpl)
    xs = [
        throughput_upper_bound(build_network(policy, p, params, mpl)).x_upper
        for p in grid
    ]

    # walk backwards: longest strictly-decreasing / non-increasing suffixes
    decrease_start = None
    plateau_start = None
    dec_ok = True
    for i in range(len(xs) - 2, -1, -1):
        scale = max(abs(xs[i]), abs(xs[i + 1]), 1e-300)
        delta = (xs[i + 1] - xs[i]) / scale
        if delta < -_REL_EPS:  # strictly decreasing step
            if dec_ok:
                decrease_start = grid[i]
            plateau_start = grid[i]
        elif delta <= _REL_EPS:  # flat step
            dec_ok = False
            plateau_start = grid[i]
        else:  # increasing step
            break
    return KneeResult(decrease_start, plateau_start)


@dataclass(frozen=True)
class Classification:
    label: str
    knee: float | None  # knee at the reference 100 us disk, if any
    knees_by_disk: dict[float, float | None]


def classify(
    policy: Policy,
    mpl: int = 72,
    disks: tuple[float, ...] = STANDARD_DISKS_US,
) -> Classification:
    """LRU-like iff the bound has a knee for some standard disk latency."""
    knees = {d: hit_ratio_knee(policy, d, mpl).knee for d in disks}
    label = LRU_LIKE if any(k is not None for k in knees.values()) else FIFO_LIKE
    knee = knees.get(100.0)
    if knee is None:
        knee = next((k for k in knees.values() if k is not None), None)
    return Classification(label=label, knee=knee, knees_by_disk=knees)
