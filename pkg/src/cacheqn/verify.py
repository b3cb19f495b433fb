"""The cross-prong verification suite.

Each check function returns a CheckResult; `run_all` executes the suite and
`render` prints the aligned pass/fail table the CLI emits.  The pytest
acceptance module drives the same functions, so the CLI and the test suite
cannot drift apart.

Checks 1-3 and 6 are analytic (bound level), 4, 5, and 7 run the simulator
matrix (6 policies x 3 disk latencies x the default hit-ratio grid, 20
replications each), 8-9 exercise the trace lab against brute-force
references, and 10 measures the concurrent prototype (hardware-dependent,
skipped unless requested on a machine with enough threads).
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .network import device_demands, throughput_upper_bound
from .policies import (
    CLOCK,
    FIFO,
    LRU,
    S3FIFO,
    SLRU,
    Policy,
    ProbLRU,
    ServiceParams,
    bound_curve,
    build_network,
    classify,
    closed_form_bound,
    default_p_grid,
    default_params,
    hit_ratio_knee,
)
from .reference import S3FifoReference, oracle_clock
from .simulate import SimConfig, SimSummary, replicate, verify_response_time_law
from .tracelab import Workload, run_policy, zipf_trace

STANDARD_DISKS = (5.0, 100.0, 500.0)


@dataclass(frozen=True)
class CheckResult:
    criterion: str
    passed: bool
    margin: str
    skipped: bool = False
    detail: str = ""


@dataclass
class MatrixCell:
    summary: SimSummary
    bound: float


# ---------------------------------------------------------------------------
# criterion 1: closed-form fidelity


def check_closed_form_fidelity() -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    for policy in (LRU(), FIFO(), CLOCK()):
        for disk in STANDARD_DISKS:
            params = default_params(policy, disk_us=disk)
            for i in range(1001):
                p = i / 1000
                direct = closed_form_bound(policy, p, disk, 72)
                generic = throughput_upper_bound(build_network(policy, p, params, 72)).x_upper
                worst = max(worst, abs(generic - direct) / direct)
    elapsed = time.perf_counter() - t0
    passed = worst < 1e-9 and elapsed < 1.0
    return CheckResult(
        "1 closed-form fidelity",
        passed,
        f"worst rel err {worst:.2e} (<1e-9), {elapsed:.2f}s (<1s)",
    )


# ---------------------------------------------------------------------------
# criterion 2: spot values


def _sig4(x: float) -> str:
    return f"{x:.4g}"


def check_spot_values() -> CheckResult:
    cases = [
        (LRU(), 0.5, 100.0, 1.3994),
        (LRU(), 0.9, 100.0, 1.5873),
        (FIFO(), 0.9, 100.0, 6.803),
    ]
    msgs = []
    ok = True
    for policy, p, disk, expected in cases:
        direct = closed_form_bound(policy, p, disk, 72)
        generic = throughput_upper_bound(build_network(policy, p, default_params(policy, disk_us=disk), 72)).x_upper
        good = _sig4(direct) == _sig4(expected) and _sig4(generic) == _sig4(expected)
        ok &= good
        msgs.append(f"{policy.name}({p})={direct:.5f} vs {expected}")
    return CheckResult("2 spot values", ok, "; ".join(msgs))


# ---------------------------------------------------------------------------
# criterion 3: knees


def check_knees() -> CheckResult:
    problems = []
    k100 = hit_ratio_knee(LRU(), 100.0, 72).knee
    if k100 is None or abs(k100 - 0.843) > 0.002:
        problems.append(f"knee(LRU,100)={k100}")
    k500 = hit_ratio_knee(LRU(), 500.0, 72).knee
    if k500 is None or not k500 > k100:
        problems.append(f"knee(LRU,500)={k500} not > {k100}")
    for policy in (FIFO(), CLOCK(), S3FIFO.with_default_table()):
        for disk in STANDARD_DISKS:
            k = hit_ratio_knee(policy, disk, 72).knee
            if k is not None:
                problems.append(f"unexpected knee({policy.name},{disk})={k}")
    xs = bound_curve(LRU(), 5.0, 72).x()
    if not np.all(np.diff(xs) <= 1e-12):
        problems.append("LRU disk-5 bound not non-increasing on [0.4, 1]")
    margin = f"knee(LRU,100)={k100:.3f}, knee(LRU,500)={k500:.3f}, FIFO-like kneeless"
    return CheckResult("3 knee locations", not problems, margin, detail="; ".join(problems))


# ---------------------------------------------------------------------------
# the simulation matrix (shared by criteria 4, 5, 7)


def matrix_policies() -> list[tuple[str, Policy]]:
    return [
        ("lru", LRU()),
        ("fifo", FIFO()),
        ("problru", ProbLRU(0.5)),
        ("clock", CLOCK()),
        ("slru", SLRU.with_default_table()),
        ("s3fifo", S3FIFO.with_default_table()),
    ]


def sim_matrix(
    cycles: int = 200_000,
    reps: int = 20,
    seed: int = 0,
    parallel: int | None = None,
) -> dict[tuple[str, float, float], MatrixCell]:
    """All (policy, disk, p_hit) cells plus ProbLRU(1 - 1/72) at 100 us."""
    configs: list[tuple[str, Policy, float, float]] = []
    for label, policy in matrix_policies():
        for disk in STANDARD_DISKS:
            for p in default_p_grid():
                configs.append((label, policy, disk, p))
    q_hi = 1.0 - 1.0 / 72.0
    for p in default_p_grid():
        configs.append(("problru-hi", ProbLRU(q_hi), 100.0, p))

    seeds = np.random.SeedSequence(seed).generate_state(len(configs), np.uint64)

    def run(i):
        label, policy, disk, p = configs[i]
        params = default_params(policy, disk_us=disk, mpl=72)
        net = build_network(policy, p, params, 72)
        # half-run warmup plus hot start: near-critical cells settle far too
        # slowly from empty queues to converge within the budget otherwise.
        # Rare-miss cells with a large disk time carry most of a cycle's time
        # in a handful of in-flight disk visits, so their per-run boundary
        # noise shrinks only with window length: run them twice as long.
        n_cycles = cycles * 2 if (disk >= 100.0 and p >= 0.92) else cycles
        cfg = SimConfig(cycles=n_cycles, warmup=n_cycles // 2, replications=reps,
                        seed=int(seeds[i]), hot_start=True)
        return MatrixCell(replicate(net, cfg), throughput_upper_bound(net).x_upper)

    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            cells = list(pool.map(run, range(len(configs))))
    else:
        cells = [run(i) for i in range(len(configs))]
    return {
        (label, disk, p): cell
        for (label, _, disk, p), cell in zip(configs, cells)
    }


def check_bound_dominance(matrix) -> CheckResult:
    worst = -math.inf
    worst_key = None
    for key, cell in matrix.items():
        ratio = cell.summary.mean_throughput / cell.bound
        if ratio > worst:
            worst, worst_key = ratio, key
    passed = worst <= 1.01
    return CheckResult(
        "4 bound dominance",
        passed,
        f"max sim/bound = {worst:.4f} (<= 1.01) at {worst_key}, {len(matrix)} cells",
    )


def _cells(matrix, label, disk):
    pts = sorted((p, cell) for (lbl, d, p), cell in matrix.items() if lbl == label and d == disk)
    return [p for p, _ in pts], [c.summary for _, c in pts]


def _nonoverlap_decline(summaries, grid, p_low, p_high):
    lo = summaries[grid.index(p_low)]
    hi = summaries[grid.index(p_high)]
    return hi.mean_throughput + hi.ci_half_width < lo.mean_throughput - lo.ci_half_width


def _monotone_within_noise(summaries) -> float:
    """Worst downward step in units of 2x the local CI half-width (<=1 passes)."""
    worst = 0.0
    for a, b in zip(summaries, summaries[1:]):
        slack = 2.0 * max(a.ci_half_width, b.ci_half_width, 1e-12)
        drop = (a.mean_throughput - b.mean_throughput) / slack
        worst = max(worst, drop)
    return worst


def check_shape_reproduction(matrix) -> CheckResult:
    problems = []
    notes = []

    grid, lru = _cells(matrix, "lru", 100.0)
    if not _nonoverlap_decline(lru, grid, 0.85, 1.00):
        problems.append("LRU X(1.00) !< X(0.85)")
    notes.append(f"LRU X(0.85)={lru[grid.index(0.85)].mean_throughput:.3f} > X(1.0)={lru[grid.index(1.0)].mean_throughput:.3f}")

    grid, prob = _cells(matrix, "problru", 100.0)
    if not _nonoverlap_decline(prob, grid, 0.85, 1.00):
        problems.append("ProbLRU(0.5) X(1.00) !< X(0.85)")

    for label in ("problru-hi", "fifo", "clock", "s3fifo"):
        disks = [100.0] if label == "problru-hi" else list(STANDARD_DISKS)
        for disk in disks:
            _, cells = _cells(matrix, label, disk)
            worst = _monotone_within_noise(cells)
            if worst > 1.0:
                problems.append(f"{label}@{disk} non-monotone ({worst:.2f}x noise)")

    grid, slru = _cells(matrix, "slru", 100.0)
    means = [s.mean_throughput for s in slru]
    peak = int(np.argmax(means))
    last = len(grid) - 1
    if peak == last or not (
        slru[last].mean_throughput + slru[last].ci_half_width
        < slru[peak].mean_throughput - slru[peak].ci_half_width
    ):
        problems.append("SLRU X(1.00) !< X(peak)")
    notes.append(f"SLRU peak at p={grid[peak]:.2f}")

    return CheckResult(
        "5 shape reproduction",
        not problems,
        "; ".join(notes),
        detail="; ".join(problems),
    )


def check_mpl_trend() -> CheckResult:
    slru = SLRU.with_default_table()
    msgs = []
    ok = True
    for disk in STANDARD_DISKS:
        k72 = hit_ratio_knee(slru, disk, 72).knee
        k144 = hit_ratio_knee(slru, disk, 144).knee
        good = k72 is not None and k144 is not None and k144 <= k72 + 1e-9
        ok &= good
        msgs.append(f"d={disk:g}: {k144} <= {k72}")
    return CheckResult("6 MPL trend (SLRU knees)", ok, "; ".join(msgs))


def check_simulation_laws(matrix, cycles: int, seed: int = 0) -> CheckResult:
    """Laws hold on converged runs: runs whose queue population drifted by
    more than mpl/8 across the window were still settling (the near-critical
    cells mix on timescales comparable to the whole measurement window) and
    are excluded; the converged fraction must stay high for the check to
    mean anything."""
    problems = []
    worst_residual = 0.0
    worst_util = 0.0
    n_runs = 0
    n_converged = 0
    for key, cell in matrix.items():
        drift_limit = max(4, cell.summary.results[0].mpl // 8)
        converged = [r for r in cell.summary.results if r.queue_drift <= drift_limit]
        n_runs += len(cell.summary.results)
        n_converged += len(converged)
        for result in converged:
            residual = verify_response_time_law(result)
            worst_residual = max(worst_residual, residual)
            if residual >= 0.005:
                problems.append(f"residual {residual:.4f} at {key}")
                break
        if not converged:
            continue
        label, disk, p = key
        policy = dict(matrix_policies()).get(label) or ProbLRU(1 - 1 / 72)
        net = build_network(policy, p, default_params(policy, disk_us=disk, mpl=72), 72)
        prof = device_demands(net)
        # the utilization law relates expectations; test it on ensemble means.
        # A saturated station visited by few cycles (rare-miss cells) gives
        # busy-time estimates too noisy for a 1-point check at this budget,
        # so those few cells get a dedicated longer run; they are by far the
        # cheapest cells to simulate.
        x_mean = sum(r.throughput for r in converged) / len(converged)
        boosted = None
        for d in prof.per_station:
            comps = sum(r.per_station[d.station].completions for r in converged)
            expected = x_mean * d.hi  # simulator-effective demand
            if expected > 0.5 and comps < 150_000:
                if boosted is None:
                    cfg = SimConfig(cycles=2_000_000, warmup=1_000_000,
                                    replications=4, seed=seed + 101, hot_start=True)
                    boosted = replicate(net, cfg)
                pool = boosted.results
                x_pool = sum(r.throughput for r in pool) / len(pool)
                mean_util = sum(r.per_station[d.station].utilization for r in pool) / len(pool)
                expected = x_pool * d.hi
            else:
                mean_util = (
                    sum(r.per_station[d.station].utilization for r in converged)
                    / len(converged)
                )
            err = abs(mean_util - expected)
            worst_util = max(worst_util, err)
            if err > 0.01:
                problems.append(f"util law off by {err:.4f} at {key}/{d.station}")
    frac = n_converged / n_runs if n_runs else 0.0
    if frac < 0.7:
        problems.append(f"only {frac:.0%} of runs converged")

    # distribution insensitivity: LRU at p in {0.5, 0.9}, disk 100
    spreads = []
    for p in (0.5, 0.9):
        net = build_network(LRU(), p)
        xs = []
        for kind in (None, "deterministic", "bounded-pareto"):
            cfg = SimConfig(cycles=cycles, replications=5, seed=seed + 7,
                            distribution_override=kind)
            xs.append(replicate(net, cfg).mean_throughput)
        spread = (max(xs) - min(xs)) / min(xs)
        spreads.append(spread)
        if spread >= 0.05:
            problems.append(f"distribution spread {spread:.3f} at p={p}")
    margin = (
        f"max law residual {worst_residual:.4f} (<0.005), "
        f"max util err {worst_util:.4f} (<0.01), "
        f"dist spread {max(spreads):.3f} (<0.05), "
        f"{frac:.0%} runs converged"
    )
    return CheckResult("7 simulation laws", not problems, margin, detail="; ".join(problems[:4]))


# ---------------------------------------------------------------------------
# criterion 8: trace-lab oracles


def _random_instances(n, seed, cap_range=(4, 8), universe=16, max_len=200):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        u = int(rng.integers(4, universe + 1))
        cap = int(rng.integers(cap_range[0], cap_range[1] + 1))
        length = int(rng.integers(20, max_len + 1))
        yield rng.integers(0, u, size=length).astype(np.int64), u, cap


def check_trace_oracles(instances: int = 1000) -> CheckResult:
    problems = []
    for tr, u, cap in _random_instances(instances, seed=808):
        fast = run_policy(CLOCK(), max(cap, 4), tr, universe=u, keep_evictions=True)
        _, _, evicted, _ = oracle_clock(tr, max(cap, 4))
        if fast.evictions.tolist() != evicted:
            problems.append("CLOCK sequence mismatch")
            break
    for tr, u, cap in _random_instances(instances, seed=809, cap_range=(1, 8)):
        a = run_policy(ProbLRU(0.0), cap, tr, universe=u, seed=1, keep_evictions=True)
        b = run_policy(LRU(), cap, tr, universe=u, keep_evictions=True)
        if a.evictions.tolist() != b.evictions.tolist():
            problems.append("ProbLRU(0) != LRU")
            break
        c = run_policy(ProbLRU(1.0), cap, tr, universe=u, seed=1, keep_evictions=True)
        d = run_policy(FIFO(), cap, tr, universe=u, keep_evictions=True)
        if c.evictions.tolist() != d.evictions.tolist():
            problems.append("ProbLRU(1) != FIFO")
            break
    for i in range(100):
        w = Workload(universe=500, theta=0.99, length=5000, seed=900 + i)
        tr = zipf_trace(w)
        ratios = [run_policy(LRU(), cap, tr).hit_ratio for cap in (8, 32, 128, 500)]
        if not all(b >= a for a, b in zip(ratios, ratios[1:])):
            problems.append(f"LRU inclusion violated at seed {900 + i}")
            break
    rng = np.random.default_rng(810)
    for _ in range(200):
        cap = int(rng.integers(10, 31))
        u = int(rng.integers(8, 64))
        tr = rng.integers(0, u, size=250).astype(np.int64)
        ref = S3FifoReference(cap).run(tr)  # audits raise on violation
        fast = run_policy(S3FIFO(), cap, tr, universe=u, keep_evictions=True)
        if fast.evictions.tolist() != ref.evicted:
            problems.append("S3-FIFO sequence mismatch")
            break
    margin = f"{instances} CLOCK + {instances} ProbLRU + 100 inclusion + 200 S3-FIFO instances"
    return CheckResult("8 trace-lab oracles", not problems, margin, detail="; ".join(problems))


def check_zipf() -> CheckResult:
    problems = []
    tr = zipf_trace(Workload(universe=10, theta=0.0, length=10**6, seed=1))
    freqs = np.bincount(tr, minlength=10) / len(tr)
    uniform_err = float(np.abs(freqs - 0.1).max())
    if uniform_err >= 0.003:
        problems.append(f"uniform deviation {uniform_err:.4f}")
    w = Workload(universe=10**6, theta=0.99, length=10**6, seed=2)
    tr = zipf_trace(w)
    h = np.sum(np.arange(1, w.universe + 1, dtype=float) ** -0.99)
    rel = abs(float(np.mean(tr == 0)) - 1 / h) * h
    if rel >= 0.02:
        problems.append(f"rank-1 deviation {rel:.4f}")
    return CheckResult(
        "9 zipf correctness",
        not problems,
        f"uniform max err {uniform_err:.4f} (<0.003), rank-1 rel err {rel:.4f} (<0.02)",
        detail="; ".join(problems),
    )


# ---------------------------------------------------------------------------
# criterion 10: bench vs sim (hardware-dependent, not CI-gating)


def check_bench(
    duration_s: float = 2.0,
    warmup_s: float = 0.5,
    runs: int = 3,
    min_threads: int = 8,
) -> CheckResult:
    hw = os.cpu_count() or 1
    if hw < min_threads:
        return CheckResult(
            "10 bench vs sim",
            True,
            f"skipped: {hw} hardware threads < {min_threads}",
            skipped=True,
        )
    from .bench import BenchConfig, calibrate, run_bench

    workers = hw
    prof = calibrate(LRU(), workers=workers, seconds=max(1.0, duration_s / 2))
    fifo_probe = run_bench(
        BenchConfig(policy=FIFO(), workers=workers, target_p_hit=1.0, disk_us=0.0,
                    duration_s=duration_s, warmup_s=warmup_s, runs=1)
    )
    z_cache = workers / fifo_probe.throughput_rps * 1e6  # us per all-hit request
    params = ServiceParams(
        z_cache=z_cache, z_disk=100.0, delink=prof.delink_us, head=prof.head_us,
        tail=prof.tail_us,
    )
    problems = []
    notes = [f"calibrated delink={prof.delink_us:.2f}us head={prof.head_us:.2f}us z={z_cache:.2f}us"]
    grid = [0.4, 0.6, 0.8, 0.9, 0.95, 1.0]
    worst_gap = 0.0
    declined = False
    lru_points = []
    for p in grid:
        bench = run_bench(
            BenchConfig(policy=LRU(), workers=workers, target_p_hit=p, disk_us=100.0,
                        duration_s=duration_s, warmup_s=warmup_s, runs=runs)
        )
        net = build_network(LRU(), p, params, mpl=workers)
        sim = replicate(net, SimConfig(cycles=100_000, replications=5, seed=3))
        gap = abs(bench.throughput_rps - sim.mean_throughput * 1e6) / bench.throughput_rps
        worst_gap = max(worst_gap, gap)
        lru_points.append((p, bench.throughput_rps))
        if gap > 0.15:
            problems.append(f"sim-vs-bench gap {gap:.2f} at p={p}")
    if prof.delink_us * 1.0 > prof.head_us:  # delink demand overtakes before p=1
        declined = lru_points[-1][1] < max(x for _, x in lru_points)
        if not declined:
            problems.append("no LRU decline despite delink-dominant profile")
        notes.append("LRU decline observed" if declined else "no decline")
    for policy in (CLOCK(), FIFO()):
        curve = []
        for p in (0.4, 0.7, 1.0):
            bench = run_bench(
                BenchConfig(policy=policy, workers=workers, target_p_hit=p,
                            disk_us=100.0, duration_s=duration_s,
                            warmup_s=warmup_s, runs=runs)
            )
            curve.append(bench.throughput_rps)
        if not all(b >= a * 0.97 for a, b in zip(curve, curve[1:])):
            problems.append(f"{policy.name} bench not monotone within noise: {curve}")
    notes.append(f"max sim-vs-bench gap {worst_gap:.2f} (<=0.15)")
    return CheckResult("10 bench vs sim", not problems, "; ".join(notes), detail="; ".join(problems))


# ---------------------------------------------------------------------------
# driver


def run_all(
    cycles: int = 200_000,
    reps: int = 20,
    seed: int = 0,
    parallel: int | None = None,
    with_bench: bool = False,
    oracle_instances: int = 1000,
) -> list[CheckResult]:
    results = [
        check_closed_form_fidelity(),
        check_spot_values(),
        check_knees(),
    ]
    t0 = time.perf_counter()
    matrix = sim_matrix(cycles=cycles, reps=reps, seed=seed, parallel=parallel)
    elapsed = time.perf_counter() - t0
    dom = check_bound_dominance(matrix)
    dom = CheckResult(dom.criterion, dom.passed, dom.margin + f"; matrix {elapsed:.0f}s", detail=dom.detail)
    results += [
        dom,
        check_shape_reproduction(matrix),
        check_mpl_trend(),
        check_simulation_laws(matrix, cycles=min(cycles, 200_000), seed=seed),
        check_trace_oracles(oracle_instances),
        check_zipf(),
    ]
    if with_bench:
        results.append(check_bench())
    else:
        results.append(
            CheckResult("10 bench vs sim", True, "skipped: run with --with-bench", skipped=True)
        )
    return results


def render(results: list[CheckResult]) -> str:
    width = max(len(r.criterion) for r in results)
    lines = []
    for r in results:
        status = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
        line = f"{r.criterion:<{width}}  {status}  {r.margin}"
        if r.detail and not r.passed:
            line += f"\n{'':<{width}}        {r.detail}"
        lines.append(line)
    return "\n".join(lines)


def classification_table() -> str:
    """The LRU-like / FIFO-like summary cmd_verify prints alongside checks."""
    rows = []
    for policy in (
        LRU(),
        ProbLRU(0.5),
        SLRU.with_default_table(),
        FIFO(),
        ProbLRU(1 - 1 / 72),
        CLOCK(),
        S3FIFO.with_default_table(),
    ):
        c = classify(policy)
        name = policy.name if not isinstance(policy, ProbLRU) else f"problru(q={policy.q:.3f})"
        knee = "-" if c.knee is None else f"{c.knee:.3f}"
        rows.append(f"  {name:<20}{c.label:<12}knee@100us: {knee}")
    return "\n".join(rows)
