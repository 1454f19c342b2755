"""
Distributed AIA Command Line Interface

Runs the planners on scenario files and writes the results.

Usage:
    aia plan --scenario desk --seed 3
    aia bench --scenario bench_template --cells 4/4,8/8 --trials 10
    aia compare-graphs --scenario desk_team --graph full --graph none
    aia replay --plan output/plan.json --scenario desk
"""

import json
import logging
import sys
from pathlib import Path
from typing import Optional

# Add src to path if running directly
if __name__ == "__main__":
    sys.path.insert(0, str(Path(__file__).parent.parent.parent))

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from src import __version__
from src.config import get_settings
from src.errors import InternalConsistencyError, InvalidArgumentError, ScenarioError

# Rich console for pretty output
console = Console()

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_PLAN = 2
EXIT_INTERNAL = 3


def setup_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True, show_path=False)],
        force=True,
    )


def fail(message: str, code: int = EXIT_USAGE) -> None:
    console.print(Panel(f"[red]{message}[/]", title="❌ Failed", border_style="red"))
    sys.exit(code)


def parse_cells(value: str) -> list[tuple[int, int]]:
    """Parse ``N/M,N/M`` into (robots, targets) pairs."""
    cells = []
    for part in value.split(","):
        try:
            n, m = part.strip().split("/")
            cells.append((int(n), int(m)))
        except ValueError:
            raise InvalidArgumentError(f"--cells expects N/M pairs, got {part!r}")
    return cells


def run_guarded(action):
    """Run a command body, mapping errors to exit codes."""
    try:
        return action()
    except InternalConsistencyError as e:
        fail(f"Internal invariant violated: {e}", EXIT_INTERNAL)
    except (ScenarioError, InvalidArgumentError, OSError, ValueError) as e:
        fail(str(e), EXIT_USAGE)


def _load(scenario: str):
    from src.scenario import load_scenario

    return load_scenario(scenario)


def _graphs(values: tuple[str, ...]):
    from src.scenario import parse_graph_option

    return [parse_graph_option(v) for v in values]


@click.group()
@click.version_option(version=__version__, prog_name="aia")
@click.option("--log-level", default=None, help="Logging level (defaults to AIA_LOG_LEVEL)")
def cli(log_level: Optional[str]):
    """
    🤖 Distributed AIA - sampling-based active information acquisition

    Robots grow local random trees, fuse beliefs with their neighbors and
    extract a minimum-uncertainty team plan.

    Examples:

        aia plan --scenario desk --seed 1

        aia plan --scenario desk_team --planner central --graph full

        aia bench --scenario bench_template --cells 4/4,8/8 --trials 5
    """
    setup_logging(log_level)


@cli.command()
@click.option("--scenario", "-s", required=True, help="Scenario file or bundled scenario name")
@click.option("--seed", default=0, type=click.IntRange(min=0), help="Root random seed")
@click.option("--n-max", type=click.IntRange(min=0), default=None, help="Iterations (scenario default)")
@click.option("--planner", type=click.Choice(["distributed", "central"]), default="distributed")
@click.option("--graph", default=None, help="full, none or random:<avg_degree>:<seed>")
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads")
@click.option("--out", "-o", type=click.Path(), default=None, help="Output directory")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--quiet", "-q", is_flag=True, help="Minimal output")
def plan(scenario, seed, n_max, planner, graph, threads, out, fmt, quiet):
    """
    Build trees, extract a team plan and verify it by replay.

    Writes plan.json and run_meta.json (plus uncertainty.csv with --format csv).
    Exits with 2 when no plan is found.
    """
    from src.workflow import PlanningWorkflow

    def body():
        workflow = PlanningWorkflow(output_dir=out, threads=threads)
        record = workflow.run_plan(
            _load(scenario),
            seed=seed,
            n_max=n_max,
            planner=planner,
            graph=_graphs((graph,))[0] if graph else None,
        )
        written = workflow.save_run(record, fmt=fmt)
        return record, written

    record, written = run_guarded(body)

    if not record.success:
        console.print(Panel(
            f"[yellow]{record.error_message}[/]\n"
            f"goal nodes per tree: {record.stats.goal_counts}",
            title="No Plan",
            border_style="yellow",
        ))
        sys.exit(EXIT_NO_PLAN)

    if quiet:
        print(record.plan.total_cost)
        return

    table = Table(title=f"✅ {planner.capitalize()} plan")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Horizon F", str(record.plan.horizon))
    table.add_row("Team cost", f"{record.plan.total_cost:.6e}")
    table.add_row("Replayed cost", f"{record.oracle_cost:.6e}")
    table.add_row("Iterations", str(record.stats.iterations))
    table.add_row("Tree sizes", str(record.stats.tree_sizes))
    table.add_row("Skipped candidates", str(record.stats.skipped_candidates))
    table.add_row("Messages", str(record.stats.messages))
    table.add_row("Graph", record.graph)
    table.add_row("Run time", f"{record.timings.total_seconds:.2f} s")
    console.print(table)
    for path in written:
        console.print(f"💾 Saved: [cyan]{path}[/]")


@cli.command()
@click.option("--scenario", "-s", required=True, help="Template scenario")
@click.option("--cells", default="4/4,8/8", help="Robot/target counts, e.g. 4/4,8/8")
@click.option("--graph", "graphs", multiple=True, default=("full", "random:2:0"), help="Graph spec (repeatable)")
@click.option("--trials", default=5, type=click.IntRange(min=1))
@click.option("--seed", default=0, type=click.IntRange(min=0))
@click.option("--n-max", type=click.IntRange(min=0), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Trials run in parallel")
@click.option("--out", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
def bench(scenario, cells, graphs, trials, seed, n_max, threads, out, fmt):
    """
    Seeded scalability trials of both planners, one row per cell and planner.
    """
    from src.workflow import PlanningWorkflow, write_csv

    def body():
        workflow = PlanningWorkflow(output_dir=out, threads=threads)
        rows = workflow.run_bench(_load(scenario), parse_cells(cells), _graphs(graphs), trials, seed, n_max)
        workflow.output_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path = write_csv(workflow.output_dir / "bench.csv", rows)
        else:
            path = workflow.output_dir / "bench.json"
            path.write_text(json.dumps([r.model_dump(mode="json") for r in rows], indent=2) + "\n")
        return rows, path

    rows, path = run_guarded(body)

    table = Table(title="Bench")
    for column in ("N/M", "graph", "planner", "ok", "F", "terms/iter", "iter s", "A.D"):
        table.add_column(column)
    for r in rows:
        table.add_row(
            f"{r.n_robots}/{r.n_targets}",
            r.graph,
            r.planner,
            f"{r.successes}/{r.trials}",
            "-" if r.mean_horizon is None else f"{r.mean_horizon:.1f}",
            f"{r.mean_fusion_terms_per_iteration:.2f}",
            f"{r.mean_iteration_s:.4f}",
            f"{r.average_degree:.2f}",
        )
    console.print(table)
    console.print(f"💾 Saved: [cyan]{path}[/]")


@cli.command("compare-graphs")
@click.option("--scenario", "-s", required=True)
@click.option("--graph", "graphs", multiple=True, default=("full", "random:2:0", "none"))
@click.option("--trials", default=20, type=click.IntRange(min=1))
@click.option("--seed", default=0, type=click.IntRange(min=0))
@click.option("--n-max", type=click.IntRange(min=0), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None)
@click.option("--out", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
def compare_graphs(scenario, graphs, trials, seed, n_max, threads, out, fmt):
    """
    Mean planning horizon per communication graph, with uncertainty series.
    """
    from src.workflow import PlanningWorkflow, write_csv

    def body():
        workflow = PlanningWorkflow(output_dir=out, threads=threads)
        report, series = workflow.compare_graphs(_load(scenario), _graphs(graphs), trials, seed, n_max)
        out_dir = workflow.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            paths = [write_csv(out_dir / "graphs.csv", report), write_csv(out_dir / "uncertainty.csv", series)]
        else:
            path = out_dir / "graphs.json"
            path.write_text(json.dumps(
                {"graphs": [r.model_dump(mode="json") for r in report],
                 "uncertainty": [s.model_dump(mode="json") for s in series]},
                indent=2,
            ) + "\n")
            paths = [path]
        return report, paths

    report, paths = run_guarded(body)

    table = Table(title="Horizon by graph")
    table.add_column("Graph", style="cyan")
    table.add_column("Plans", style="green")
    table.add_column("Mean F", style="yellow")
    for r in report:
        table.add_row(r.graph, f"{r.successes}/{r.trials}", "-" if r.mean_horizon is None else f"{r.mean_horizon:.2f}")
    console.print(table)
    for path in paths:
        console.print(f"💾 Saved: [cyan]{path}[/]")


@cli.command()
@click.option("--plan", "plan_file", required=True, type=click.Path(exists=True), help="plan.json")
@click.option("--scenario", "-s", required=True)
@click.option("--out", "-o", type=click.Path(), default=None, help="Write uncertainty.csv here")
def replay(plan_file, scenario, out):
    """
    Recompute a stored plan's cost and determinant series from the priors.

    Exits with 3 when the replayed cost disagrees with the stored one.
    """
    from src.workflow import PlanningWorkflow, UncertaintyRow, load_plan, write_csv

    def body():
        workflow = PlanningWorkflow(output_dir=out)
        plan_result = load_plan(Path(plan_file))
        return plan_result, workflow.replay(plan_result, _load(scenario))

    plan_result, report = run_guarded(body)

    border = "green" if report.matches else "red"
    console.print(Panel(
        f"Planner: {report.planner}\n"
        f"Reported cost: {report.reported_cost:.17g}\n"
        f"Replayed cost: {report.replayed_cost:.17g}",
        title="✅ Replay matches" if report.matches else "❌ Replay mismatch",
        border_style=border,
    ))
    if out:
        rows = [
            UncertaintyRow(graph="", seed=plan_result.seed, robot=r, target=l, t=t, det=series[t][l])
            for r, series in enumerate(report.determinants)
            for l in range(len(series[0]))
            for t in range(len(series))
        ]
        path = write_csv(Path(out) / "uncertainty.csv", rows)
        console.print(f"💾 Saved: [cyan]{path}[/]")
    if not report.matches:
        sys.exit(EXIT_INTERNAL)


@cli.command()
def info():
    """
    Show settings and the bundled scenarios.
    """
    settings = get_settings()
    console.print(Panel(
        "[bold cyan]🤖 Distributed AIA[/]\n\n"
        "[bold]Planners:[/]\n"
        "  • distributed: one tree per robot, DKF fusion with neighbors\n"
        "  • central: one joint tree, centralized Kalman filter\n\n"
        "[bold]Settings:[/]\n"
        f"  • AIA_THREADS={settings.threads}\n"
        f"  • AIA_OUTPUT_DIR={settings.output_dir}\n"
        f"  • AIA_LOG_LEVEL={settings.log_level}\n"
        f"  • AIA_CHECK_INVARIANTS={settings.check_invariants}\n"
        f"  • AIA_SCENARIO_DIR={settings.scenario_dir}",
        title="About",
        border_style="cyan",
    ))

    table = Table(title="Scenarios")
    table.add_column("Name", style="cyan")
    table.add_column("Robots", style="green")
    table.add_column("Targets", style="green")
    table.add_column("Status", style="yellow")
    from src.scenario import load_scenario

    for path in sorted(settings.scenario_dir.glob("*.json")):
        try:
            s = load_scenario(path)
            table.add_row(path.stem, str(s.n_robots), str(s.n_targets), "✅")
        except ScenarioError as e:
            table.add_row(path.stem, "-", "-", f"❌ {e.args[0]}")
    console.print(table)


@cli.command()
def schema():
    """
    Print the scenario JSON schema.
    """
    from src.scenario import scenario_json_schema

    print(json.dumps(scenario_json_schema(), indent=2))


def main(argv: Optional[list[str]] = None):
    """Entry point for the CLI; usage errors exit with 1 since 2 means no plan."""
    try:
        code = cli.main(args=argv, prog_name="aia", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        sys.exit(EXIT_USAGE)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    sys.exit(code if isinstance(code, int) else EXIT_OK)


if __name__ == "__main__":
    main()
