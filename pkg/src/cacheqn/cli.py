"""Command-line front end: bound / simulate / trace / bench / verify.

Sweeps emit plot-ready CSV (header in report.CSV_HEADER, throughput both in
requests/us and requests/s).  All randomized commands honor --seed
end-to-end.  Flat key=value config files with [section] headers can seed any
command's defaults; command-line flags win.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .backend import selected_backend
from .policies import POLICY_NAMES, S3FIFO, SLRU, policy_from_name
from .report import SweepSpec, bound_rows, sim_rows, write_rows
from .simulate import SimConfig


def _parse_grid(text: str | None) -> list[float] | None:
    """Either comma-separated values or start:stop:step."""
    if not text:
        return None
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        n = int(round((stop - start) / step))
        return [round(start + i * step, 10) for i in range(n + 1)]
    return [float(x) for x in text.split(",")]


def _load_config(path: str | None, section: str) -> dict[str, str]:
    if not path:
        return {}
    values: dict[str, str] = {}
    current = ""
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            continue
        if "=" in line and current in ("", section):
            k, v = line.split("=", 1)
            values[k.strip().replace("-", "_")] = v.strip()
    return values


def _find_param(ctx: click.Context, key: str):
    """Match a config key against parameter names or their long flags."""
    for p in ctx.command.params:
        flags = {o.lstrip("-").replace("-", "_") for o in getattr(p, "opts", [])}
        if p.name == key or key in flags:
            return p
    return None


def _apply_config(ctx: click.Context, config: str | None):
    defaults = _load_config(config, ctx.command.name)
    for key, value in defaults.items():
        param = _find_param(ctx, key)
        if param is None or ctx.get_parameter_source(param.name).name != "DEFAULT":
            continue
        if param.multiple:  # comma-separated in config files
            ctx.params[param.name] = tuple(
                param.type.convert(v.strip(), param, ctx) for v in value.split(",")
            )
        else:
            ctx.params[param.name] = param.type.convert(value, param, ctx)
    return ctx.params


def _policies(names, q, fractions_file):
    policies = []
    for name in names:
        policy = policy_from_name(name, q=q)
        if fractions_file and isinstance(policy, (SLRU, S3FIFO)):
            from .tracelab import EstimatorTable

            table = EstimatorTable.from_csv(fractions_file)
            if isinstance(policy, SLRU):
                policy = SLRU(t_fraction=table.fraction_table("f_t"))
            else:
                policy = S3FIFO(
                    p_ghost=table.fraction_table("p_ghost"),
                    p_m=table.fraction_table("p_m"),
                )
        policies.append(policy)
    return tuple(policies)


@click.group()
@click.version_option(package_name="cacheqn")
def main():
    """Cache eviction-policy throughput: bounds, simulation, traces, bench."""


policy_opt = click.option(
    "--policy", "policies", multiple=True, default=("lru",),
    type=click.Choice(POLICY_NAMES), help="Policy; repeatable.",
)
q_opt = click.option("--q", default=0.5, show_default=True,
                     help="ProbLRU skip probability.")
disk_opt = click.option("--disk-us", "disks", multiple=True, type=float,
                        default=(5.0, 100.0, 500.0), show_default=True,
                        help="Disk think time in microseconds; repeatable.")
mpl_opt = click.option("--mpl", "mpls", multiple=True, type=int, default=(72,),
                       show_default=True, help="Multi-programming limit; repeatable.")
grid_opt = click.option("--grid", default=None,
                        help="Hit-ratio grid: 'a,b,c' or 'start:stop:step' "
                             "(default 0.40-0.90/0.05 then 0.92-1.00/0.02).")
seed_opt = click.option("--seed", default=0, show_default=True)
out_opt = click.option("--out", required=True, type=click.Path(dir_okay=False),
                       help="Output CSV path.")
fractions_opt = click.option("--fractions-file", default=None,
                             type=click.Path(exists=True, dir_okay=False),
                             help="Estimator CSV for SLRU/S3-FIFO fractions "
                                  "(default: packaged tables).")
config_opt = click.option("--config", default=None,
                          type=click.Path(exists=True, dir_okay=False),
                          help="key=value defaults file with [sections].")


@main.command()
@policy_opt
@q_opt
@disk_opt
@mpl_opt
@grid_opt
@seed_opt
@fractions_opt
@out_opt
@config_opt
@click.pass_context
def bound(ctx, policies, q, disks, mpls, grid, seed, fractions_file, out, config):
    """Analytic throughput upper bounds over a hit-ratio sweep."""
    p = _apply_config(ctx, config)
    spec = SweepSpec(
        prongs=("bound",),
        policies=_policies(p["policies"], p["q"], p["fractions_file"]),
        disks_us=tuple(p["disks"]),
        mpls=tuple(p["mpls"]),
        grid=tuple(_parse_grid(p["grid"]) or SweepSpec.__dataclass_fields__["grid"].default_factory()),
        seed=p["seed"],
    )
    rows = bound_rows(spec)
    write_rows(p["out"], rows)
    click.echo(f"wrote {len(rows)} bound rows to {p['out']}")


@main.command()
@policy_opt
@q_opt
@disk_opt
@mpl_opt
@grid_opt
@seed_opt
@fractions_opt
@click.option("--reps", default=20, show_default=True, help="Replications per point.")
@click.option("--cycles", default=200_000, show_default=True,
              help="Measured request cycles per replication.")
@click.option("--warmup", default=None, type=int,
              help="Warmup cycles (default max(5000, cycles/10)).")
@click.option("--dist", default=None,
              type=click.Choice(["deterministic", "exponential", "bounded-pareto"]),
              help="Override every queue station's service distribution.")
@click.option("--parallel", default=1, show_default=True,
              help="Thread workers across grid points.")
@out_opt
@config_opt
@click.pass_context
def simulate(ctx, policies, q, disks, mpls, grid, seed, fractions_file, reps,
             cycles, warmup, dist, parallel, out, config):
    """Event-driven simulation of the policy networks over a sweep."""
    p = _apply_config(ctx, config)
    spec = SweepSpec(
        prongs=("sim",),
        policies=_policies(p["policies"], p["q"], p["fractions_file"]),
        disks_us=tuple(p["disks"]),
        mpls=tuple(p["mpls"]),
        grid=tuple(_parse_grid(p["grid"]) or SweepSpec.__dataclass_fields__["grid"].default_factory()),
        seed=p["seed"],
    )
    cfg = SimConfig(cycles=p["cycles"], warmup=p["warmup"], replications=p["reps"],
                    seed=p["seed"], distribution_override=p["dist"])
    rows = sim_rows(spec, cfg, parallel=p["parallel"])
    write_rows(p["out"], rows)
    click.echo(
        f"wrote {len(rows)} sim rows to {p['out']} (backend: {selected_backend()})"
    )


@main.command()
@click.option("--what", required=True,
              type=click.Choice(["slru", "s3fifo", "clock"]),
              help="Which estimator to run.")
@click.option("--universe", default=100_000, show_default=True)
@click.option("--theta", default=0.99, show_default=True)
@click.option("--length", default=1_000_000, show_default=True)
@grid_opt
@seed_opt
@click.option("--tolerance", default=0.005, show_default=True,
              help="Calibration hit-ratio tolerance.")
@out_opt
@config_opt
@click.pass_context
def trace(ctx, what, universe, theta, length, grid, seed, tolerance, out, config):
    """Trace-level estimation of SLRU/S3-FIFO fractions or CLOCK scan depth."""
    from .tracelab import (
        Workload,
        clock_scan_profile,
        estimate_s3fifo_params,
        estimate_slru_t_fraction,
    )

    p = _apply_config(ctx, config)
    w = Workload(universe=p["universe"], theta=p["theta"], length=p["length"],
                 seed=p["seed"])
    grid_values = _parse_grid(p["grid"])
    fn = {
        "slru": estimate_slru_t_fraction,
        "s3fifo": estimate_s3fifo_params,
        "clock": clock_scan_profile,
    }[p["what"]]
    table = fn(w, grid_values, tolerance=p["tolerance"])
    table.to_csv(p["out"])
    click.echo(f"wrote {len(table.rows)} {p['what']} rows to {p['out']}")


@main.command()
@click.option("--policy", "policies", multiple=True, default=("lru",),
              type=click.Choice(["lru", "fifo", "problru", "clock"]),
              help="Bench policy; repeatable (SLRU/S3-FIFO are not implemented "
                   "in the prototype, matching the modeled system).")
@q_opt
@click.option("--disk-us", "disks", multiple=True, type=float, default=(100.0,),
              show_default=True)
@grid_opt
@click.option("--workers", default=0, show_default=True,
              help="Worker threads (0 = hardware count).")
@click.option("--capacity", default=4096, show_default=True)
@click.option("--duration", default=10.0, show_default=True, help="Seconds per run.")
@click.option("--warmup", default=5.0, show_default=True, help="Warmup seconds.")
@click.option("--runs", default=20, show_default=True)
@seed_opt
@click.option("--trace-mode", is_flag=True,
              help="Replay a Zipf workload against the real index instead of "
                   "Bernoulli hit/miss; capacity is calibrated per target.")
@click.option("--universe", default=100_000, show_default=True,
              help="Trace-mode workload universe.")
@click.option("--theta", default=0.99, show_default=True,
              help="Trace-mode Zipf parameter.")
@click.option("--length", default=1_000_000, show_default=True,
              help="Trace-mode trace length.")
@click.option("--profile", default=None, type=click.Path(dir_okay=False),
              help="Calibration profile path (default: <out>.profile).")
@out_opt
@config_opt
@click.pass_context
def bench(ctx, policies, q, disks, grid, workers, capacity, duration, warmup,
          runs, seed, trace_mode, universe, theta, length, profile, out, config):
    """Measure the concurrent cache prototype over a hit-ratio sweep."""
    import csv as _csv

    from .bench import BenchConfig, bench_csv_rows, calibrate, run_bench

    p = _apply_config(ctx, config)
    grid_values = _parse_grid(p["grid"]) or [0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
    all_rows = []
    prof = None
    for name in p["policies"]:
        policy = policy_from_name(name, q=p["q"])
        prof = calibrate(policy, workers=p["workers"], capacity=p["capacity"],
                         seed=p["seed"])
        click.echo(
            f"calibrated {name}: delink={prof.delink_us:.3f}us "
            f"head={prof.head_us:.3f}us tail={prof.tail_us:.3f}us"
        )
        for disk in p["disks"]:
            for target in grid_values:
                cap = p["capacity"]
                trace = None
                if p["trace_mode"]:
                    cap, trace = _calibrated_trace(
                        policy, p["universe"], p["theta"], p["length"],
                        p["seed"], target,
                    )
                cfg = BenchConfig(
                    policy=policy, workers=p["workers"], target_p_hit=target,
                    disk_us=disk, capacity=cap, duration_s=p["duration"],
                    warmup_s=p["warmup"], runs=p["runs"], seed=p["seed"],
                    trace=trace,
                )
                result = run_bench(cfg, calibrated=prof)
                all_rows.extend(bench_csv_rows(name, cfg, result))
                click.echo(
                    f"  {name} disk={disk:g} p={target:.2f}: "
                    f"{result.throughput_rps:,.0f} rps (hit {result.hit_ratio:.3f})"
                )
    with open(p["out"], "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["policy", "p_hit", "disk_us", "workers", "run",
                    "throughput_rps", "hit_ratio"])
        w.writerows(all_rows)
    if prof is not None:
        prof.save(p["profile"] or f"{p['out']}.profile")
    click.echo(f"wrote {len(all_rows)} bench rows to {p['out']}")


def _calibrated_trace(policy, universe, theta, length, seed, target):
    """Trace mode: find the capacity realizing the target, return it + trace."""
    from .tracelab import Workload, calibrate_capacity, zipf_trace

    w = Workload(universe=universe, theta=theta, length=length, seed=seed)
    res = calibrate_capacity(policy, w, target, tolerance=0.01)
    if not res.converged:
        raise click.ClickException(
            f"target hit ratio {target} unachievable for this workload "
            f"(best {res.achieved:.3f} at capacity {res.capacity})"
        )
    return max(res.capacity, 8), zipf_trace(w, stream=2)


@main.command()
@click.option("--cycles", default=200_000, show_default=True)
@click.option("--reps", default=20, show_default=True)
@seed_opt
@click.option("--parallel", default=2, show_default=True)
@click.option("--with-bench", is_flag=True,
              help="Include the hardware-dependent bench-vs-sim checks.")
@click.option("--oracle-instances", default=1000, show_default=True)
def verify(cycles, reps, seed, parallel, with_bench, oracle_instances):
    """Run the acceptance suite and print one pass/fail line per criterion."""
    from . import verify as v

    results = v.run_all(
        cycles=cycles, reps=reps, seed=seed, parallel=parallel,
        with_bench=with_bench, oracle_instances=oracle_instances,
    )
    click.echo(v.render(results))
    click.echo("\npolicy classification:")
    click.echo(v.classification_table())
    failed = [r for r in results if not r.passed and not r.skipped]
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
