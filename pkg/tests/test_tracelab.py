"""Trace-level policy machines, workload generation, calibration, estimators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cacheqn.policies import CLOCK, FIFO, LRU, S3FIFO, SLRU, ProbLRU
from cacheqn.tracelab import (
    EstimatorTable,
    Workload,
    calibrate_capacity,
    clock_scan_profile,
    estimate_s3fifo_params,
    estimate_slru_t_fraction,
    load_trace,
    run_policy,
    save_trace,
    slru_t_capacity,
    zipf_trace,
)

from cacheqn.reference import S3FifoReference, oracle_clock, oracle_lru


def small_traces(n, seed, universe=16, max_len=200):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        u = rng.integers(4, universe + 1)
        length = rng.integers(20, max_len + 1)
        yield rng.integers(0, u, size=length).astype(np.int64), int(u)


# ---------------------------------------------------------------------------
# zipf workload


def test_zipf_theta_zero_uniform():
    w = Workload(universe=10, theta=0.0, length=10**6, seed=1)
    tr = zipf_trace(w)
    freqs = np.bincount(tr, minlength=10) / len(tr)
    assert np.all(np.abs(freqs - 0.1) < 0.003)


def test_zipf_rank1_frequency_matches_harmonic_sum():
    w = Workload(universe=10**6, theta=0.99, length=10**6, seed=2)
    tr = zipf_trace(w)
    h = np.sum(np.arange(1, w.universe + 1, dtype=float) ** -0.99)
    predicted = 1.0 / h
    observed = np.mean(tr == 0)
    assert observed == pytest.approx(predicted, rel=0.02)


def test_zipf_deterministic_per_seed():
    w = Workload(universe=100, theta=0.99, length=5000, seed=7)
    assert np.array_equal(zipf_trace(w), zipf_trace(w))
    assert not np.array_equal(zipf_trace(w), zipf_trace(w, stream=1))


def test_trace_roundtrip(tmp_path):
    tr = zipf_trace(Workload(universe=50, theta=0.5, length=300, seed=3))
    path = tmp_path / "trace.txt"
    save_trace(path, tr)
    assert np.array_equal(load_trace(path), tr)
    assert path.read_text().splitlines()[0] == str(tr[0])


# ---------------------------------------------------------------------------
# policy semantics vs brute-force oracles


def test_lru_cold_misses_only():
    tr = zipf_trace(Workload(universe=200, theta=0.8, length=5000, seed=11))
    stats = run_policy(LRU(), 200, tr)
    assert stats.hit_ratio == 1 - len(np.unique(tr)) / len(tr)


def test_lru_beats_fifo_on_loop_with_reuse():
    # A,B,A,C,A,D,...: LRU keeps the hot key, FIFO ages it out
    hot, others = 0, [1, 2, 3, 4, 5]
    tr = []
    for o in others * 8:
        tr += [hot, o]
    tr = np.array(tr, dtype=np.int64)
    lru = run_policy(LRU(), 2, tr)
    fifo = run_policy(FIFO(), 2, tr)
    assert lru.hit_ratio >= fifo.hit_ratio
    assert lru.hit_ratio > 0.4


def test_lru_matches_oracle_on_small_instances():
    for tr, u in small_traces(150, seed=23):
        cap = int(np.random.default_rng(len(tr)).integers(1, 9))
        stats = run_policy(LRU(), cap, tr, universe=u, keep_evictions=True)
        hits, misses, evicted = oracle_lru(tr, cap)
        assert (stats.hits, stats.misses) == (hits, misses)
        assert stats.evictions.tolist() == evicted


def test_clock_matches_oracle_on_small_instances():
    rng = np.random.default_rng(31)
    for tr, u in small_traces(200, seed=29):
        cap = int(rng.integers(4, 9))
        stats = run_policy(CLOCK(), cap, tr, universe=u, keep_evictions=True)
        hits, misses, evicted, depths = oracle_clock(tr, cap)
        assert (stats.hits, stats.misses) == (hits, misses)
        assert stats.evictions.tolist() == evicted
        if depths:
            assert stats.mean_scan_depth == pytest.approx(np.mean(depths))
            assert max(depths) <= 4


def test_problru_q0_is_lru_and_q1_is_fifo():
    rng = np.random.default_rng(37)
    for tr, u in small_traces(150, seed=41):
        cap = int(rng.integers(1, 9))
        as_lru = run_policy(ProbLRU(0.0), cap, tr, universe=u, seed=5, keep_evictions=True)
        lru = run_policy(LRU(), cap, tr, universe=u, keep_evictions=True)
        assert np.array_equal(as_lru.evictions, lru.evictions)
        assert as_lru.hits == lru.hits
        as_fifo = run_policy(ProbLRU(1.0), cap, tr, universe=u, seed=5, keep_evictions=True)
        fifo = run_policy(FIFO(), cap, tr, universe=u, keep_evictions=True)
        assert np.array_equal(as_fifo.evictions, fifo.evictions)
        assert as_fifo.hits == fifo.hits


def test_problru_seed_reproducible():
    tr = zipf_trace(Workload(universe=500, theta=0.9, length=20000, seed=13))
    a = run_policy(ProbLRU(0.5), 50, tr, seed=99, keep_evictions=True)
    b = run_policy(ProbLRU(0.5), 50, tr, seed=99, keep_evictions=True)
    c = run_policy(ProbLRU(0.5), 50, tr, seed=100, keep_evictions=True)
    assert np.array_equal(a.evictions, b.evictions)
    assert not np.array_equal(a.evictions, c.evictions)


def test_lru_inclusion_monotone_in_capacity():
    for i in range(25):
        w = Workload(universe=500, theta=0.99, length=8000, seed=100 + i)
        tr = zipf_trace(w)
        ratios = [run_policy(LRU(), cap, tr).hit_ratio for cap in (10, 40, 120, 400)]
        assert all(b >= a for a, b in zip(ratios, ratios[1:]))


def test_s3fifo_matches_reference_and_invariants():
    rng = np.random.default_rng(43)
    for tr, u in small_traces(60, seed=47, universe=40, max_len=400):
        cap = int(rng.integers(10, 21))
        stats = run_policy(S3FIFO(), cap, tr, universe=u, keep_evictions=True)
        ref = S3FifoReference(cap).run(tr)  # audits after every request
        assert (stats.hits, stats.misses) == (ref.hits, ref.misses)
        assert stats.evictions.tolist() == ref.evicted
        if ref.misses:
            assert stats.p_ghost == pytest.approx(ref.ghost_admits / ref.misses)
        if ref.stail:
            assert stats.p_m == pytest.approx(ref.stail_bit1 / ref.stail)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_s3fifo_structural_property(seed):
    rng = np.random.default_rng(seed)
    cap = int(rng.integers(10, 31))
    u = int(rng.integers(8, 64))
    tr = rng.integers(0, u, size=300).astype(np.int64)
    ref = S3FifoReference(cap).run(tr)  # per-request audits raise on violation
    stats = run_policy(S3FIFO(), cap, tr, universe=u, keep_evictions=True)
    assert stats.evictions.tolist() == ref.evicted


def test_occupancy_fills_and_stays():
    w = Workload(universe=2000, theta=0.9, length=30000, seed=17)
    tr = zipf_trace(w)
    for policy, cap in ((LRU(), 100), (FIFO(), 100), (CLOCK(), 100), (SLRU(), 100), (S3FIFO(), 100)):
        stats = run_policy(policy, cap, tr)
        assert stats.final_occupancy == cap
        # prefix ending right after warm fill is also exactly full
        stats_half = run_policy(policy, cap, tr[: len(tr) // 2])
        assert stats_half.final_occupancy == cap


def test_slru_t_capacity_split():
    assert slru_t_capacity(100) == 80
    assert slru_t_capacity(10) == 8
    assert slru_t_capacity(2) == 1  # B always keeps a slot
    assert slru_t_capacity(5, t_share=0.0) == 0


def test_slru_degenerate_protected_zero():
    tr = zipf_trace(Workload(universe=100, theta=0.9, length=5000, seed=19))
    stats = run_policy(SLRU(), 20, tr, t_share=0.0)
    assert stats.t_hit_fraction == 0.0


def test_run_policy_validation():
    tr = np.array([1, 2, 3], dtype=np.int64)
    with pytest.raises(ValueError):
        run_policy(CLOCK(), 3, tr)  # below scan-rule minimum
    with pytest.raises(ValueError):
        run_policy(S3FIFO(), 9, tr)
    with pytest.raises(ValueError):
        run_policy(LRU(), 2, tr, measure_from=3)
    with pytest.raises(ValueError):
        run_policy(LRU(), 2, np.array([], dtype=np.int64))


# ---------------------------------------------------------------------------
# calibration


W_SMALL = Workload(universe=20_000, theta=0.99, length=150_000, seed=23)


def test_calibrate_hits_target():
    res = calibrate_capacity(LRU(), W_SMALL, 0.80, tolerance=0.002)
    assert res.converged
    assert abs(res.achieved - 0.80) <= 0.002


def test_calibrate_ceiling_is_flagged():
    res = calibrate_capacity(LRU(), W_SMALL, 0.9999, tolerance=0.002)
    assert res.capacity == W_SMALL.universe
    assert not res.converged
    assert res.achieved < 0.9999


def test_calibrate_floor_is_flagged():
    # even a single-slot cache catches some re-references of the top key
    res = calibrate_capacity(LRU(), W_SMALL, 0.001, tolerance=0.002)
    assert res.capacity == 1
    assert not res.converged


def test_calibrate_validation():
    with pytest.raises(ValueError):
        calibrate_capacity(LRU(), W_SMALL, 0.8, tolerance=0.001)
    with pytest.raises(ValueError):
        calibrate_capacity(LRU(), W_SMALL, 0.0)


# ---------------------------------------------------------------------------
# estimators


GRID = [0.5, 0.7, 0.85]


def test_slru_estimator_table(tmp_path):
    t = estimate_slru_t_fraction(W_SMALL, GRID)
    assert t.header == ("p_hit", "f_t")
    assert len(t.rows) == len(GRID)
    assert np.all((t.column("f_t") >= 0) & (t.column("f_t") <= 1))
    # determinism
    again = estimate_slru_t_fraction(W_SMALL, GRID)
    assert t == again
    # csv round trip
    path = tmp_path / "ft.csv"
    t.to_csv(path)
    assert EstimatorTable.from_csv(path) == t
    # convertible to an interpolation table
    ft = t.fraction_table("f_t")
    assert 0.0 <= ft(0.75) <= 1.0


def test_s3fifo_estimator_table():
    t = estimate_s3fifo_params(W_SMALL, GRID)
    assert t.header == ("p_hit", "p_ghost", "p_m")
    assert np.all((t.column("p_ghost") >= 0) & (t.column("p_ghost") <= 1))
    assert np.all((t.column("p_m") >= 0) & (t.column("p_m") <= 1))


def test_s3fifo_all_unique_trace_zero_fractions():
    tr = np.arange(5000, dtype=np.int64)
    stats = run_policy(S3FIFO(), 100, tr)
    assert stats.p_ghost == 0.0
    assert stats.p_m == 0.0


def test_clock_scan_profile_shape():
    t = clock_scan_profile(W_SMALL, GRID)
    depths = t.column("mean_scan_depth")
    assert np.all(depths <= 4.0)
    assert np.all(np.diff(depths) >= -0.05)


def test_clock_scan_depth_near_one_at_low_hit_ratio():
    # nearly-unique trace: bits are almost never set, so evictions scan depth 1
    rng = np.random.default_rng(53)
    tr = rng.permutation(50_000)[:30_000].astype(np.int64)
    stats = run_policy(CLOCK(), 500, tr)
    assert stats.hit_ratio < 0.01
    assert stats.mean_scan_depth == pytest.approx(1.0, abs=0.05)
