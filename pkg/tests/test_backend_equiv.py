"""The numba kernels and their pure-Python twins must agree exactly.

Both lanes consume identical arrays and the same xoshiro256** streams, so
every output — floats included — is compared for bit equality.  A failure
here means the twin implementations have drifted.
"""

import numpy as np
import pytest

from cacheqn import backend
from cacheqn.policies import CLOCK, FIFO, LRU, S3FIFO, SLRU, ProbLRU, build_network
from cacheqn.simulate import SimConfig, simulate
from cacheqn.tracelab import Workload, run_policy, zipf_trace

pytestmark = pytest.mark.skipif(
    not backend.HAS_NUMBA, reason="numba unavailable; only one lane to compare"
)

NETWORKS = [
    build_network(LRU(), 0.9),
    build_network(LRU(), 0.5),
    build_network(FIFO(), 0.6),
    build_network(ProbLRU(0.5), 0.95),
    build_network(CLOCK(), 0.7),
    build_network(SLRU(t_fraction=0.7), 0.8),
    build_network(S3FIFO(p_ghost=0.4, p_m=0.3), 0.85),
]


@pytest.fixture
def force_backend(monkeypatch):
    def set_lane(name):
        monkeypatch.setenv(backend.ENV_VAR, name)

    return set_lane


@pytest.mark.parametrize("net", NETWORKS, ids=lambda n: n.label)
def test_sim_lanes_bit_identical(net, force_backend):
    cfg = SimConfig(cycles=4000, warmup=400, seed=17, debug=True)
    force_backend("numba")
    a = simulate(net, cfg)
    force_backend("python")
    b = simulate(net, cfg)
    assert a == b  # dataclass equality covers every float field exactly


def test_sim_override_lanes_identical(force_backend):
    net = build_network(LRU(), 0.8)
    for kind in ("deterministic", "bounded-pareto"):
        cfg = SimConfig(cycles=2000, warmup=200, seed=3, distribution_override=kind)
        force_backend("numba")
        a = simulate(net, cfg)
        force_backend("python")
        b = simulate(net, cfg)
        assert a == b


def test_sim_hot_start_lanes_identical(force_backend):
    net = build_network(LRU(), 0.95)
    cfg = SimConfig(cycles=3000, warmup=300, seed=5, hot_start=True, debug=True)
    force_backend("numba")
    a = simulate(net, cfg)
    force_backend("python")
    b = simulate(net, cfg)
    assert a == b
    assert a.conservation_violations == 0


@pytest.mark.parametrize(
    "policy",
    [LRU(), FIFO(), ProbLRU(0.4), CLOCK(), SLRU(), S3FIFO()],
    ids=lambda p: p.name,
)
def test_trace_lanes_bit_identical(policy, force_backend):
    tr = zipf_trace(Workload(universe=2000, theta=0.95, length=30_000, seed=29))
    force_backend("numba")
    a = run_policy(policy, 150, tr, seed=7, keep_evictions=True)
    force_backend("python")
    b = run_policy(policy, 150, tr, seed=7, keep_evictions=True)
    assert (a.hits, a.misses, a.final_occupancy) == (b.hits, b.misses, b.final_occupancy)
    assert np.array_equal(a.evictions, b.evictions)
    assert a.t_hit_fraction == b.t_hit_fraction
    assert a.p_ghost == b.p_ghost and a.p_m == b.p_m
    assert a.mean_scan_depth == b.mean_scan_depth


def test_backend_selection(monkeypatch):
    monkeypatch.setenv(backend.ENV_VAR, "python")
    assert backend.selected_backend() == "python"
    monkeypatch.setenv(backend.ENV_VAR, "auto")
    assert backend.selected_backend() == "numba"
    monkeypatch.delenv(backend.ENV_VAR)
    assert backend.selected_backend() == "numba"
    monkeypatch.setenv(backend.ENV_VAR, "nonsense")
    with pytest.raises(ValueError):
        backend.selected_backend()
