"""Command-line interface: plan, simulate, bench, validate, report."""

from __future__ import annotations

import logging
import os
import sys

import click

from . import bench as bench_mod
from . import c3, planner, sim
from .planner import PlannerConfig
from .world import load_world_file

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PLANNER_FAILURE = 2

log = logging.getLogger("tamp")


def _setup_logging() -> None:
    level = os.environ.get("TAMP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main():
    """Task-and-motion planning toolkit."""
    _setup_logging()


def _fail(msg: str, code: int = EXIT_ERROR):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@main.command("plan")
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["local", "global"]), default="global")
@click.option("--samples", type=int, default=50)
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
def plan_cmd(scenario, mode, samples, seed, out):
    """Plan on a scenario file and write the plan JSON."""
    try:
        world, goal = load_world_file(scenario)
        cfg = PlannerConfig(mode=mode, samples_per_action=samples, rng_seed=seed)
        plan_, stats = planner.plan(world, goal, cfg)
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
    if plan_ is None:
        click.echo(f"planner failed after {stats.expansions} expansions "
                   f"({stats.total_time_s:.2f}s)", err=True)
        sys.exit(EXIT_PLANNER_FAILURE)
    c3.save_plan(plan_, out)
    click.echo(f"plan with {len(plan_)} steps "
               f"({stats.expansions} expansions, {stats.total_time_s:.2f}s) -> {out}")


@main.command("simulate")
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["local", "global"]), default="global")
@click.option("--seed", type=int, default=0)
@click.option("--samples", type=int, default=50)
@click.option("--trace", "trace_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def simulate_cmd(scenario, mode, seed, samples, trace_path, out):
    """Run the plan-execute-monitor loop and write result JSON (+trace)."""
    try:
        world, goal = load_world_file(scenario)
        cfg = PlannerConfig(mode=mode, samples_per_action=samples, rng_seed=seed)
        result, trace = sim.simulate(world, goal, mode=mode, seed=seed,
                                     planner_cfg=cfg)
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
    sim.save_result(result, out)
    if trace_path:
        trace.write_csv(trace_path)
    click.echo(f"success={result.success} replans={result.replans} "
               f"sim_time={result.sim_time:.1f}s -> {out}")
    if not result.success:
        sys.exit(EXIT_PLANNER_FAILURE)


def _parse_grid(text: str) -> list[dict]:
    """K=V1;V2,K2=... -> cross product of per-key value lists."""
    if not text:
        return [{}]
    axes = []
    for part in text.split(","):
        if "=" not in part:
            raise ValueError(f"bad grid entry {part!r}")
        k, vals = part.split("=", 1)
        axes.append((k.strip(), [v for v in vals.split(";") if v != ""]))
    cells = [{}]
    for k, vals in axes:
        cells = [dict(c, **{k: v}) for c in cells for v in vals]
    return cells


@main.command("bench")
@click.option("--family", required=True,
              type=click.Choice(["known-env", "doorways", "platforms",
                                 "unknown-env", "toy"]))
@click.option("--grid", default="", help="K=V1;V2,K2=V — parameter grid")
@click.option("--modes", default="local,global")
@click.option("--trials", type=int, default=5)
@click.option("--seed", type=int, default=0)
@click.option("--jobs", type=int, default=1)
@click.option("--samples", type=int, default=50)
@click.option("--local-repeats", type=int, default=1)
@click.option("--execute", is_flag=True, default=False,
              help="run the simulator per trial instead of planning only")
@click.option("--out", required=True, type=click.Path())
@click.option("--summary", "summary_path", type=click.Path(), default=None)
def bench_cmd(family, grid, modes, trials, seed, jobs, samples, local_repeats,
              execute, out, summary_path):
    """Run a benchmark family over a parameter grid."""
    try:
        cells = _parse_grid(grid)
        mode_list = [m.strip() for m in modes.split(",") if m.strip()]
        records = bench_mod.run_benchmark(
            family, cells, mode_list, trials, seed, jobs=jobs,
            local_repeats=local_repeats, execute=execute,
            planner_kw={"samples_per_action": samples})
        bench_mod.write_records_csv(records, out)
        if summary_path:
            bench_mod.write_summary(records, summary_path)
    except OSError as e:
        _fail(f"{e.strerror}: {getattr(e, 'filename', '')}")
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
    click.echo(f"{len(records)} records -> {out}")


@main.command("validate")
@click.option("--scenario", required=True, type=click.Path(exists=True))
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["local", "global"]), default="global")
def validate_cmd(scenario, plan_path, mode):
    """Replay a plan against a scenario with eager feasibility checks."""
    try:
        world, goal = load_world_file(scenario)
        plan_ = c3.load_plan(plan_path)
        ok, msg = planner.validate_plan(world, plan_, goal, mode=mode)
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
    if not ok:
        click.echo(f"invalid: {msg}", err=True)
        sys.exit(EXIT_PLANNER_FAILURE)
    click.echo("plan valid")


@main.command("report")
@click.option("--results", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
def report_cmd(results, out_dir):
    """Render figures from a benchmark results CSV."""
    from . import report as report_mod
    try:
        paths = report_mod.render_report(results, out_dir)
    except Exception as e:  # noqa: BLE001
        _fail(str(e))
    for p in paths:
        click.echo(str(p))


if __name__ == "__main__":
    main()
