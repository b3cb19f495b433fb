"""CLI surface: sweeps, CSV schemas, determinism, config files, errors."""

import csv

import pytest
from click.testing import CliRunner

from cacheqn.cli import main
from cacheqn.report import CSV_HEADER, SweepSpec, bound_rows


@pytest.fixture
def runner():
    return CliRunner()


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bound_csv_schema(runner, tmp_path):
    out = tmp_path / "bounds.csv"
    res = runner.invoke(main, [
        "bound", "--policy", "lru", "--disk-us", "100", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    rows = read_csv(out)
    assert tuple(rows[0]) == CSV_HEADER
    assert len(rows) == 1 + 16  # header + default grid
    # full-precision decimal, binding term and bottleneck filled
    assert float(rows[1][6]) > 0
    assert float(rows[1][7]) == pytest.approx(float(rows[1][6]) * 1e6)
    assert rows[1][9] in ("population-limited", "bottleneck-limited")
    assert rows[1][10] != ""


def test_bound_fifo_strictly_increasing(runner, tmp_path):
    out = tmp_path / "fifo.csv"
    res = runner.invoke(main, [
        "bound", "--policy", "fifo", "--disk-us", "100", "--out", str(out),
    ])
    assert res.exit_code == 0
    xs = [float(r[6]) for r in read_csv(out)[1:]]
    assert all(b > a for a, b in zip(xs, xs[1:]))


def test_bound_three_disk_curves(runner, tmp_path):
    out = tmp_path / "lru3.csv"
    res = runner.invoke(main, ["bound", "--policy", "lru", "--out", str(out)])
    assert res.exit_code == 0
    rows = read_csv(out)[1:]
    assert {r[3] for r in rows} == {"5.0", "100.0", "500.0"}


def test_empty_policy_list_is_usage_error():
    with pytest.raises(ValueError):
        SweepSpec(prongs=("bound",), policies=())


def test_sim_deterministic_given_seed(runner, tmp_path):
    args = ["simulate", "--policy", "lru", "--disk-us", "100", "--grid", "0.5,0.9",
            "--reps", "2", "--cycles", "5000", "--seed", "7"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, args + ["--out", str(out1)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_sim_rows_below_bound_rows(runner, tmp_path):
    sim_out = tmp_path / "sim.csv"
    res = runner.invoke(main, [
        "simulate", "--policy", "fifo", "--disk-us", "100", "--grid", "0.5,0.8",
        "--reps", "3", "--cycles", "20000", "--out", str(sim_out),
    ])
    assert res.exit_code == 0
    spec = SweepSpec(prongs=("bound",), policies=(__import__("cacheqn").FIFO(),),
                     disks_us=(100.0,), grid=(0.5, 0.8))
    bounds = {r.p_hit: r.throughput for r in bound_rows(spec)}
    for row in read_csv(sim_out)[1:]:
        assert float(row[6]) <= bounds[float(row[5])] * 1.01


def test_trace_estimator_csv(runner, tmp_path):
    out = tmp_path / "s3.csv"
    res = runner.invoke(main, [
        "trace", "--what", "s3fifo", "--universe", "5000", "--length", "80000",
        "--grid", "0.5,0.8", "--seed", "5", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    rows = read_csv(out)
    assert rows[0] == ["p_hit", "p_ghost", "p_m"]
    assert len(rows) >= 2
    # byte-identical on rerun
    out2 = tmp_path / "s3b.csv"
    runner.invoke(main, [
        "trace", "--what", "s3fifo", "--universe", "5000", "--length", "80000",
        "--grid", "0.5,0.8", "--seed", "5", "--out", str(out2),
    ])
    assert out.read_bytes() == out2.read_bytes()


def test_fractions_file_feeds_bound(runner, tmp_path):
    ft = tmp_path / "ft.csv"
    res = runner.invoke(main, [
        "trace", "--what", "slru", "--universe", "5000", "--length", "80000",
        "--grid", "0.5,0.8", "--seed", "5", "--out", str(ft),
    ])
    assert res.exit_code == 0, res.output
    out = tmp_path / "slru_bound.csv"
    res = runner.invoke(main, [
        "bound", "--policy", "slru", "--fractions-file", str(ft),
        "--disk-us", "100", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    assert len(read_csv(out)) == 17


def test_bench_cli_quick(runner, tmp_path):
    out = tmp_path / "bench.csv"
    prof = tmp_path / "profile.txt"
    res = runner.invoke(main, [
        "bench", "--policy", "fifo", "--disk-us", "5", "--grid", "0.9,1.0",
        "--workers", "2", "--capacity", "256", "--duration", "0.2",
        "--warmup", "0.1", "--runs", "1", "--out", str(out),
        "--profile", str(prof),
    ])
    assert res.exit_code == 0, res.output
    rows = read_csv(out)
    assert rows[0] == ["policy", "p_hit", "disk_us", "workers", "run",
                       "throughput_rps", "hit_ratio"]
    assert len(rows) == 3
    assert prof.exists()
    text = prof.read_text()
    assert "head_us=" in text and "tail_us=" in text


def test_bench_cli_trace_mode(runner, tmp_path):
    out = tmp_path / "bench_trace.csv"
    res = runner.invoke(main, [
        "bench", "--policy", "lru", "--disk-us", "2", "--grid", "0.7",
        "--workers", "2", "--duration", "0.3", "--warmup", "0.1", "--runs", "1",
        "--trace-mode", "--universe", "20000", "--length", "150000",
        "--seed", "23", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    rows = read_csv(out)
    assert len(rows) == 2
    achieved = float(rows[1][6])
    assert abs(achieved - 0.7) < 0.08  # workload-driven, not Bernoulli-exact


def test_bench_cli_trace_mode_unachievable_target(runner, tmp_path):
    res = runner.invoke(main, [
        "bench", "--policy", "lru", "--grid", "0.999", "--workers", "2",
        "--duration", "0.2", "--warmup", "0.1", "--runs", "1",
        "--trace-mode", "--universe", "20000", "--length", "100000",
        "--out", str(tmp_path / "x.csv"),
    ])
    assert res.exit_code != 0
    assert "unachievable" in res.output


def test_bench_rejects_slru(runner, tmp_path):
    res = runner.invoke(main, [
        "bench", "--policy", "slru", "--out", str(tmp_path / "x.csv"),
    ])
    assert res.exit_code != 0
    assert "slru" in res.output.lower()


def test_config_file_defaults(runner, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("[bound]\ngrid=0.5,0.9\nseed=9\ndisk-us=100,500\n")
    out = tmp_path / "out.csv"
    res = runner.invoke(main, [
        "bound", "--policy", "lru", "--config", str(cfg), "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    # two grid points x two configured disks, plus the header
    assert len(read_csv(out)) == 5


def test_sim_rows_parallel_matches_serial():
    import cacheqn
    from cacheqn.report import sim_rows
    from cacheqn.simulate import SimConfig

    spec = SweepSpec(prongs=("sim",), policies=(cacheqn.LRU(), cacheqn.CLOCK()),
                     disks_us=(100.0,), grid=(0.5, 0.9), seed=3)
    cfg = SimConfig(cycles=4000, warmup=400, replications=2)
    serial = sim_rows(spec, cfg, parallel=None)
    threaded = sim_rows(spec, cfg, parallel=2)
    assert serial == threaded  # same seeds, same merge order


def test_fractions_file_feeds_simulate(runner, tmp_path):
    ft = tmp_path / "s3.csv"
    res = runner.invoke(main, [
        "trace", "--what", "s3fifo", "--universe", "5000", "--length", "60000",
        "--grid", "0.6,0.8", "--seed", "5", "--out", str(ft),
    ])
    assert res.exit_code == 0, res.output
    out = tmp_path / "s3_sim.csv"
    res = runner.invoke(main, [
        "simulate", "--policy", "s3fifo", "--fractions-file", str(ft),
        "--disk-us", "100", "--grid", "0.6,0.9", "--reps", "2",
        "--cycles", "4000", "--out", str(out),
    ])
    assert res.exit_code == 0, res.output
    assert len(read_csv(out)) == 3


def test_verify_exit_code_reflects_checks(runner, monkeypatch):
    from cacheqn.verify import CheckResult
    from cacheqn import verify as vmod

    good = [CheckResult("1 x", True, "fine"), CheckResult("10 y", True, "skipped", skipped=True)]
    monkeypatch.setattr(vmod, "run_all", lambda **kw: good)
    res = runner.invoke(main, ["verify", "--cycles", "10", "--reps", "2"])
    assert res.exit_code == 0
    assert "PASS" in res.output and "SKIP" in res.output

    bad = [CheckResult("1 x", False, "broken", detail="why")]
    monkeypatch.setattr(vmod, "run_all", lambda **kw: bad)
    res = runner.invoke(main, ["verify"])
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_config_file_flag_override(runner, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("[bound]\ngrid=0.5,0.9\n")
    out = tmp_path / "out.csv"
    res = runner.invoke(main, [
        "bound", "--policy", "lru", "--disk-us", "100", "--grid", "0.4,0.6,0.8",
        "--config", str(cfg), "--out", str(out),
    ])
    assert res.exit_code == 0
    assert len(read_csv(out)) == 4  # command line wins over config
