"""Policy builders, closed forms, knee finder, and classification."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cacheqn import (
    CLOCK,
    FIFO,
    FIFO_LIKE,
    LRU,
    LRU_LIKE,
    S3FIFO,
    SLRU,
    FractionTable,
    ProbLRU,
    bound_curve,
    build_network,
    classify,
    clock_g,
    closed_form_bound,
    default_p_grid,
    default_params,
    device_demands,
    hit_ratio_knee,
    throughput_upper_bound,
)

SLRU_CONST = SLRU(t_fraction=0.7)
S3_CONST = S3FIFO(p_ghost=0.4, p_m=0.3)
ALL_POLICIES = [LRU(), FIFO(), ProbLRU(0.5), CLOCK(), SLRU_CONST, S3_CONST]


# ---------------------------------------------------------------------------
# builders


def test_build_rejects_bad_p_hit():
    with pytest.raises(ValueError):
        build_network(LRU(), 1.2)
    with pytest.raises(ValueError):
        build_network(LRU(), -0.01)


def test_slru_requires_fraction_source():
    with pytest.raises(ValueError):
        build_network(SLRU(), 0.5)
    with pytest.raises(ValueError):
        build_network(S3FIFO(), 0.5)


def test_fifo_all_hits_zero_demand():
    prof = device_demands(build_network(FIFO(), 1.0))
    assert all(d.hi == 0.0 for d in prof.per_station)


def test_problru_q0_matches_lru_routing():
    lru = build_network(LRU(), 0.9).leaves()
    prob = build_network(ProbLRU(0.0), 0.9).leaves()
    lru_paths = {
        (round(p, 15), tuple((v.station, v.think) for v in visits))
        for p, visits in lru
        if p > 0
    }
    prob_paths = {
        (round(p, 15), tuple((v.station, v.think) for v in visits))
        for p, visits in prob
        if p > 0
    }
    assert lru_paths == prob_paths


def test_lru_demand_matches_printed_terms():
    prof = device_demands(build_network(LRU(), 0.9))
    assert prof.total_lo == pytest.approx(0.7 * 0.9 + 0.59, rel=1e-12)
    assert prof.think_time == pytest.approx(100.51 - 90.0, rel=1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_problru_delink_demand_linear_in_q(p, q):
    prof = device_demands(build_network(ProbLRU(q), p))
    assert prof.demand("delink").lo == pytest.approx(
        (1 - q) * p * 0.7, rel=1e-9, abs=1e-12
    )


def test_problru_q1_zero_delink_demand():
    prof = device_demands(build_network(ProbLRU(1.0), 0.9))
    assert prof.demand("delink").lo == 0.0


def test_slru_branch_demands():
    f_t = 0.7
    p = 0.8
    prof = device_demands(build_network(SLRU(t_fraction=f_t), p))
    assert prof.demand("delinkT").lo == pytest.approx(p * f_t * 0.7, rel=1e-12)
    assert prof.demand("delinkB").lo == pytest.approx(p * (1 - f_t) * 0.7, rel=1e-12)
    assert prof.demand("headT").lo == pytest.approx(p * 0.59, rel=1e-12)
    # headB: demotions on B-hits plus miss inserts
    assert prof.demand("headB").lo == pytest.approx(
        (p * (1 - f_t) + (1 - p)) * 0.59, rel=1e-12
    )
    assert prof.demand("tailT").interval and prof.demand("tailB").interval


def test_s3fifo_branch_demands():
    pg, pm, p = 0.4, 0.3, 0.5
    prof = device_demands(build_network(S3FIFO(p_ghost=pg, p_m=pm), p))
    miss = 1 - p
    tail = 0.65 + 0.3 * clock_g(p)
    assert prof.demand("tailS").lo == pytest.approx(miss * (1 - pg) * tail, rel=1e-12)
    assert prof.demand("tailM").lo == pytest.approx(
        miss * (pg + (1 - pg) * pm) * tail, rel=1e-12
    )
    # head updates carry only an upper bound for CLOCK-family policies
    assert prof.demand("headS").interval and prof.demand("headM").interval
    assert prof.demand("headM").hi == pytest.approx(
        miss * (pg + (1 - pg) * pm) * 0.65, rel=1e-12
    )


def test_fraction_table_interpolation_and_clamp():
    t = FractionTable([0.4, 0.8], [0.2, 0.6])
    assert t(0.6) == pytest.approx(0.4)
    assert t(0.0) == 0.2  # clamped below
    assert t(1.0) == 0.6  # clamped above
    net = build_network(SLRU(t_fraction=t), 0.6)
    assert device_demands(net).demand("delinkT").lo == pytest.approx(
        0.6 * 0.4 * 0.7, rel=1e-12
    )


# ---------------------------------------------------------------------------
# clock g


def test_clock_g_values():
    assert clock_g(0.0) == pytest.approx(2.43e-5 + 0.187, rel=1e-12)
    assert clock_g(0.0) == pytest.approx(0.18702, abs=5e-6)
    assert clock_g(0.9) == pytest.approx(2.43e-5 * math.exp(10.116) + 0.187, rel=1e-12)
    assert clock_g(0.9) == pytest.approx(0.7881, abs=2e-4)
    assert clock_g(1.0) == pytest.approx(2.43e-5 * math.exp(11.24) + 0.187, rel=1e-12)
    assert clock_g(1.0) == pytest.approx(2.0366, abs=2e-4)
    with pytest.raises(ValueError):
        clock_g(1.5)


@given(st.floats(0.4, 1.0))
@settings(max_examples=100, deadline=None)
def test_clock_tail_demand_vanishes_despite_scan_growth(p):
    d = (1 - p) * (0.65 + 0.3 * clock_g(p))
    d_next = (1 - min(p + 1e-3, 1.0)) * (0.65 + 0.3 * clock_g(min(p + 1e-3, 1.0)))
    assert d_next <= d + 1e-15  # strictly shrinking toward zero at p = 1


# ---------------------------------------------------------------------------
# closed forms vs generic engine


def test_closed_form_spot_values():
    assert closed_form_bound(LRU(), 0.5, 100.0, 72) == pytest.approx(1.3994, abs=5e-5)
    assert closed_form_bound(FIFO(), 0.9, 100.0, 72) == pytest.approx(6.803, abs=5e-4)
    assert closed_form_bound(LRU(), 1.0, 5.0, 72) == pytest.approx(1 / 0.7, rel=1e-12)


def test_closed_form_rejects_uncovered_policies():
    with pytest.raises(ValueError):
        closed_form_bound(ProbLRU(0.5), 0.5, 100.0, 72)
    with pytest.raises(ValueError):
        closed_form_bound(SLRU_CONST, 0.5, 100.0, 72)


@pytest.mark.parametrize("policy", [LRU(), FIFO(), CLOCK()])
@pytest.mark.parametrize("disk", [5.0, 100.0, 500.0])
def test_closed_form_equals_generic_engine(policy, disk):
    params = default_params(policy, disk_us=disk)
    for i in range(0, 1001, 7):  # denser sweep lives in the acceptance suite
        p = i / 1000
        direct = closed_form_bound(policy, p, disk, 72)
        generic = throughput_upper_bound(build_network(policy, p, params, 72)).x_upper
        assert generic == pytest.approx(direct, rel=1e-9)


def test_closed_form_generalizes_to_other_disks():
    # recipe path (disk not in {5, 100, 500}) must agree with the engine too
    for policy in (LRU(), FIFO(), CLOCK()):
        params = default_params(policy, disk_us=37.0)
        direct = closed_form_bound(policy, 0.77, 37.0, 72)
        generic = throughput_upper_bound(build_network(policy, 0.77, params, 72)).x_upper
        assert generic == pytest.approx(direct, rel=1e-9)


# ---------------------------------------------------------------------------
# curves and knees


def test_bound_curve_lru_100_shape():
    curve = bound_curve(LRU(), 100.0, 72)
    xs = curve.x()
    ps = curve.p()
    peak = xs.max()
    assert peak == pytest.approx(1 / 0.59, rel=1e-9)
    # rises into the plateau, flat through 0.84, falls after
    assert xs[0] < peak
    plateau = xs[(ps >= 0.60) & (ps <= 0.84)]
    assert np.allclose(plateau, peak, rtol=1e-12)
    assert xs[-1] < peak


def test_bound_curve_fifo_strictly_increasing():
    xs = bound_curve(FIFO(), 100.0, 72).x()
    assert np.all(np.diff(xs) > 0)


def test_bound_curve_lru_disk5_nonincreasing():
    xs = bound_curve(LRU(), 5.0, 72).x()
    assert np.all(np.diff(xs) <= 1e-12)


def test_bound_curve_grid_validation():
    with pytest.raises(ValueError):
        bound_curve(LRU(), 100.0, 72, grid=[0.5, 0.5])


def test_default_grid():
    grid = default_p_grid()
    assert grid[0] == 0.40 and grid[-1] == 1.00
    assert 0.90 in grid and 0.92 in grid and 0.85 in grid
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_knee_lru_100():
    res = hit_ratio_knee(LRU(), 100.0, 72)
    assert res.knee == pytest.approx(0.59 / 0.7, abs=2e-3)
    assert res.plateau_start == pytest.approx(0.59, abs=2e-3)


def test_knee_absent_for_fifo():
    assert hit_ratio_knee(FIFO(), 100.0, 72).knee is None


def test_knee_lru_disk5_plateau_vs_decrease():
    res = hit_ratio_knee(LRU(), 5.0, 72)
    assert res.knee == pytest.approx(0.59 / 0.7, abs=2e-3)
    assert res.plateau_start == 0.0
    restricted = hit_ratio_knee(LRU(), 5.0, 72, lo=0.4)
    assert restricted.plateau_start == pytest.approx(0.40, abs=1e-9)


def test_knee_ordering_across_disks():
    k5 = hit_ratio_knee(LRU(), 5.0, 72).knee
    k100 = hit_ratio_knee(LRU(), 100.0, 72).knee
    k500 = hit_ratio_knee(LRU(), 500.0, 72).knee
    assert k500 >= k100 >= k5


def test_slru_knee_moves_earlier_at_higher_mpl():
    for disk in (5.0, 100.0, 500.0):
        k72 = hit_ratio_knee(SLRU_CONST, disk, 72).knee
        k144 = hit_ratio_knee(SLRU_CONST, disk, 144).knee
        assert k72 is not None and k144 is not None
        assert k144 <= k72 + 1e-9


# ---------------------------------------------------------------------------
# classification


def test_classify_reference_policies():
    assert classify(LRU()).label == LRU_LIKE
    assert classify(CLOCK()).label == FIFO_LIKE
    assert classify(FIFO()).label == FIFO_LIKE
    assert classify(ProbLRU(0.5)).label == LRU_LIKE
    assert classify(SLRU_CONST).label == LRU_LIKE


def test_classify_problru_extreme_q():
    assert classify(ProbLRU(1 - 1 / 72), mpl=72).label == FIFO_LIKE


def test_classify_fifo_like_has_no_knee():
    c = classify(CLOCK())
    assert c.knee is None
    assert all(k is None for k in c.knees_by_disk.values())
