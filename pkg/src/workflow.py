"""
Planning Workflow Orchestrator

Ties scenarios, planners and the replay oracle together into the
experiments the CLI exposes: single plans, scalability benches, graph
density comparisons and plan replays.
"""

import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from statistics import fmean
from typing import Iterable, Optional, Sequence

import networkx
import numpy as np
import scipy
from pydantic import BaseModel

from src import __version__
from src.belief import full_det
from src.commgraph import max_degree
from src.config import get_settings
from src.errors import InvalidArgumentError, OracleMismatchError, PlanningError
from src.planners.central import build_central_plan, build_central_tree, replay_central_beliefs
from src.planners.context import PlanningContext
from src.planners.distributed import build_trees
from src.planners.team_path import build_plan_result, extract_team_plan, replay_beliefs
from src.results import PlannerKind, PlanResult, PlanStats, RunRecord, RunTimings
from src.scenario import GraphSpec, Scenario, build_context, scenario_hash, with_graph, with_population

logger = logging.getLogger(__name__)

ORACLE_TOLERANCE = 1e-9


class BenchRow(BaseModel):
    """One (robots, targets, graph, planner) cell of a bench."""
    n_robots: int
    n_targets: int
    graph: str
    planner: PlannerKind
    trials: int
    successes: int
    errors: int
    mean_runtime_s: float
    mean_horizon: Optional[float]
    mean_iteration_s: float
    mean_fusion_terms_per_iteration: float
    mean_belief_updates_per_iteration: float
    mean_messages: float
    average_degree: float
    max_degree: int


class GraphComparisonRow(BaseModel):
    graph: str
    trials: int
    successes: int
    mean_horizon: Optional[float]
    horizons: list[Optional[int]]


class UncertaintyRow(BaseModel):
    graph: str
    seed: int
    robot: int
    target: int
    t: int
    det: float


class ReplayReport(BaseModel):
    planner: PlannerKind
    reported_cost: float
    replayed_cost: float
    matches: bool
    determinants: list[list[list[float]]]


def versions() -> dict[str, str]:
    return {
        "distributed-aia": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "networkx": networkx.__version__,
    }


def check_oracle(reported: float, replayed: float) -> bool:
    return abs(reported - replayed) <= ORACLE_TOLERANCE * max(1.0, abs(reported))


def replay_plan(plan: PlanResult, ctx: PlanningContext) -> tuple[float, list[list[list[float]]]]:
    """
    Re-simulate the filters along a plan's fixed paths from the priors.

    Returns:
        The team cost and the determinants indexed [robot][time step][target].
    """
    if plan.planner == "central":
        beliefs = replay_central_beliefs(plan, ctx)
        cost = 0.0
        for b in beliefs:
            cost += full_det(b)
        dets = [[math.exp(ld) for ld in b.log_dets] for b in beliefs]
        return cost, [dets for _ in plan.paths]

    beliefs = replay_beliefs(plan, ctx)
    total = 0.0
    determinants = []
    for p in plan.paths:
        cost = 0.0
        for n in p.node_ids:
            cost += full_det(beliefs[(p.robot, n)])
        total += cost
        determinants.append([[math.exp(ld) for ld in beliefs[(p.robot, n)].log_dets] for n in p.node_ids])
    return total, determinants


def uncertainty_rows(plan: PlanResult, graph: str = "") -> list[UncertaintyRow]:
    return [
        UncertaintyRow(graph=graph, seed=plan.seed, robot=r, target=l, t=t, det=series[t][l])
        for r, series in enumerate(plan.determinants)
        for l in range(len(series[0]))
        for t in range(len(series))
    ]


def write_csv(path: Path, rows: Sequence[BaseModel]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        if not rows:
            return path
        fieldnames = list(type(rows[0]).model_fields)
        writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            data = row.model_dump(mode="json")
            writer.writerow({k: "" if v is None else v for k, v in data.items()})
    return path


def _mean(values: Iterable[float]) -> Optional[float]:
    values = list(values)
    return fmean(values) if values else None


class PlanningWorkflow:
    """
    Main workflow orchestrator that runs planners on scenarios and checks
    every plan against the replay oracle.
    """

    def __init__(self, output_dir: Optional[str] = None, threads: Optional[int] = None):
        """
        Initialize the workflow.

        Args:
            output_dir: Directory for result files; defaults to AIA_OUTPUT_DIR.
            threads: Worker threads; defaults to AIA_THREADS.
        """
        settings = get_settings()
        self.output_dir = Path(output_dir) if output_dir else settings.output_dir
        self.threads = threads or settings.threads

    # -- single runs -------------------------------------------------------

    def run_plan(
        self,
        scenario: Scenario,
        seed: int = 0,
        n_max: Optional[int] = None,
        planner: PlannerKind = "distributed",
        graph: Optional[GraphSpec] = None,
        threads: Optional[int] = None,
        base_hash: Optional[str] = None,
    ) -> RunRecord:
        """
        Build trees, extract a plan and verify its cost by replay.

        Args:
            scenario: The experiment.
            seed: Root seed.
            n_max: Iterations; the scenario default when omitted.
            planner: "distributed" or "central".
            graph: Replaces the scenario's graph.
            threads: Worker threads for the distributed planner.
            base_hash: Hash to stamp on the result; the scenario's own by default.

        Returns:
            RunRecord; ``success`` is False when no plan was found.

        Raises:
            OracleMismatchError: If the replayed cost disagrees with the plan.
        """
        h = base_hash or scenario_hash(scenario)
        if graph is not None:
            scenario = with_graph(scenario, graph)
        n_max = scenario.planner.n_max if n_max is None else n_max
        ctx = build_context(scenario)
        logger.info(
            "Planning %s with %s planner: N=%d M=%d n_max=%d seed=%d graph=%s",
            scenario.name or "scenario",
            planner,
            ctx.n_robots,
            ctx.n_targets,
            n_max,
            seed,
            ctx.graph.describe(),
        )

        start = time.perf_counter()
        if planner == "central":
            plan, stats, iteration_seconds = self._run_central(ctx, n_max, seed, h)
        else:
            plan, stats, iteration_seconds = self._run_distributed(ctx, n_max, seed, h, threads or self.threads)
        timings = RunTimings(total_seconds=time.perf_counter() - start, iteration_seconds=iteration_seconds)

        record = RunRecord(
            scenario_hash=h,
            seed=seed,
            planner=planner,
            n_max=n_max,
            success=plan is not None,
            error_message=None if plan is not None else f"No plan found within {n_max} iterations",
            plan=plan,
            stats=stats,
            timings=timings,
            graph=ctx.graph.describe(),
            average_degree=ctx.graph.average_degree,
            max_degree=max_degree(ctx.graph),
            versions=versions(),
        )
        if plan is not None:
            record.oracle_cost, _ = replay_plan(plan, ctx)
            if not check_oracle(plan.total_cost, record.oracle_cost):
                raise OracleMismatchError(
                    f"Replayed cost {record.oracle_cost!r} differs from planned cost {plan.total_cost!r}"
                )
        return record

    def _run_distributed(self, ctx, n_max, seed, h, threads):
        outcome = build_trees(ctx, n_max, seed, threads=threads)
        extraction = extract_team_plan(outcome, ctx)
        total = outcome.total
        stats = PlanStats(
            iterations=outcome.iterations,
            samples=total.samples,
            rejections=total.rejections,
            expansions=total.expansions,
            belief_updates=total.belief_updates,
            fusion_terms=total.fusion_terms,
            neighbor_fetches=total.neighbor_fetches,
            fusion_terms_per_iteration=(
                total.fusion_terms / (outcome.iterations * ctx.n_robots) if outcome.iterations else 0.0
            ),
            build_messages=total.messages,
            extraction_messages=extraction.messages,
            candidates=extraction.candidates,
            skipped_candidates=extraction.skipped,
            tree_sizes=[len(t) for t in outcome.trees],
            goal_counts=[len(t.goal_set) for t in outcome.trees],
        )
        plan = None
        if extraction.paths is not None:
            plan = build_plan_result(outcome, extraction, ctx, stats, seed, n_max, h)
        return plan, stats, outcome.iteration_seconds

    def _run_central(self, ctx, n_max, seed, h):
        outcome = build_central_tree(ctx, n_max, seed)
        c = outcome.counters
        stats = PlanStats(
            iterations=outcome.iterations,
            samples=c.samples,
            rejections=c.rejections,
            expansions=c.expansions,
            belief_updates=c.belief_updates,
            fusion_terms=c.fusion_terms,
            fusion_terms_per_iteration=c.fusion_terms / outcome.iterations if outcome.iterations else 0.0,
            candidates=len(outcome.tree.goal_set),
            tree_sizes=[len(outcome.tree)],
            goal_counts=[len(outcome.tree.goal_set)],
        )
        plan = None
        if outcome.best_goal is not None:
            plan = build_central_plan(outcome, ctx, stats, seed, n_max, h)
        return plan, stats, outcome.iteration_seconds

    def save_run(self, record: RunRecord, out_dir: Optional[Path] = None, fmt: str = "json") -> list[Path]:
        """Write plan.json, run_meta.json and, for csv format, uncertainty.csv."""
        out = Path(out_dir) if out_dir else self.output_dir
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if record.plan is not None:
            plan_path = out / "plan.json"
            plan_path.write_text(record.plan.model_dump_json(indent=2) + "\n")
            written.append(plan_path)
            if fmt == "csv":
                written.append(write_csv(out / "uncertainty.csv", uncertainty_rows(record.plan, record.graph)))
        meta_path = out / "run_meta.json"
        meta_path.write_text(json.dumps(record.meta(), indent=2, sort_keys=True) + "\n")
        written.append(meta_path)
        return written

    # -- experiments -------------------------------------------------------

    def _trials(self, runs: list) -> list:
        """Run independent trial thunks, keeping their order."""
        if self.threads > 1 and len(runs) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(lambda run: run(), runs))
        return [run() for run in runs]

    def _safe_run(self, *args, **kwargs) -> Optional[RunRecord]:
        """One trial; a planning error is logged and recorded as a missing record."""
        try:
            return self.run_plan(*args, **kwargs)
        except PlanningError as e:
            logger.warning("Trial with seed %s failed: %s: %s", kwargs.get("seed"), type(e).__name__, e)
            return None

    def run_bench(
        self,
        template: Scenario,
        cells: Sequence[tuple[int, int]],
        graphs: Sequence[GraphSpec],
        trials: int,
        seed: int = 0,
        n_max: Optional[int] = None,
        planners: Sequence[PlannerKind] = ("distributed", "central"),
    ) -> list[BenchRow]:
        """
        Seeded trials of both planners on randomly populated copies of a template.

        Trial t of every cell uses seed + t for both population and planning;
        random graphs use their own seed + t.
        """
        rows = []
        base = scenario_hash(template)
        for n_robots, n_targets in cells:
            for graph in graphs:
                for planner in planners:
                    runs = []
                    for t in range(trials):
                        scenario = with_population(template, n_robots, n_targets, seed + t)
                        spec = graph.model_copy(update={"seed": graph.seed + t}) if graph.kind == "random" else graph
                        runs.append(
                            lambda s=scenario, g=spec, k=seed + t, p=planner: self._safe_run(
                                s, seed=k, n_max=n_max, planner=p, graph=g, threads=1, base_hash=base
                            )
                        )
                    records = self._trials(runs)
                    rows.append(self._bench_row(n_robots, n_targets, graph, planner, records))
                    logger.info("Bench cell N=%d M=%d %s %s done", n_robots, n_targets, graph.kind, planner)
        return rows

    @staticmethod
    def _bench_row(n_robots, n_targets, graph, planner, records) -> BenchRow:
        done = [r for r in records if r is not None]
        ok = [r for r in done if r.success]
        iterations = [max(r.stats.iterations, 1) for r in done]
        label = graph.kind if graph.kind != "random" else f"random:{graph.avg_degree:g}"
        degrees = [r.average_degree for r in done]
        return BenchRow(
            n_robots=n_robots,
            n_targets=n_targets,
            graph=label,
            planner=planner,
            trials=len(records),
            successes=len(ok),
            errors=len(records) - len(done),
            mean_runtime_s=_mean(r.timings.total_seconds for r in done) or 0.0,
            mean_horizon=_mean(r.plan.horizon for r in ok),
            mean_iteration_s=_mean(r.timings.mean_iteration_seconds for r in done) or 0.0,
            mean_fusion_terms_per_iteration=_mean(r.stats.fusion_terms_per_iteration for r in done) or 0.0,
            mean_belief_updates_per_iteration=_mean(
                r.stats.belief_updates / (i * (n_robots if planner == "distributed" else 1))
                for r, i in zip(done, iterations)
            ) or 0.0,
            mean_messages=_mean(r.stats.messages for r in done) or 0.0,
            average_degree=_mean(degrees) or 0.0,
            max_degree=max((r.max_degree for r in done), default=0),
        )

    def compare_graphs(
        self,
        scenario: Scenario,
        graphs: Sequence[GraphSpec],
        trials: int,
        seed: int = 0,
        n_max: Optional[int] = None,
    ) -> tuple[list[GraphComparisonRow], list[UncertaintyRow]]:
        """
        Mean horizon of the distributed planner under each graph, plus the
        determinant time series of the first successful trial per graph.
        """
        report, series = [], []
        for graph in graphs:
            label = graph.kind if graph.kind != "random" else f"random:{graph.avg_degree:g}:{graph.seed}"
            runs = [
                lambda k=seed + t: self._safe_run(scenario, seed=k, n_max=n_max, graph=graph, threads=1)
                for t in range(trials)
            ]
            records = self._trials(runs)
            horizons = [r.plan.horizon if r is not None and r.plan is not None else None for r in records]
            report.append(
                GraphComparisonRow(
                    graph=label,
                    trials=trials,
                    successes=sum(h is not None for h in horizons),
                    mean_horizon=_mean(h for h in horizons if h is not None),
                    horizons=horizons,
                )
            )
            first = next((r for r in records if r is not None and r.plan is not None), None)
            if first is not None:
                series.extend(uncertainty_rows(first.plan, label))
        return report, series

    def replay(self, plan: PlanResult, scenario: Scenario) -> ReplayReport:
        """
        Recompute a stored plan's cost and determinant series.

        Raises:
            InvalidArgumentError: If the plan was made for another scenario.
        """
        expected = scenario_hash(scenario)
        if plan.scenario_hash != expected:
            raise InvalidArgumentError(
                f"Plan was made for scenario {plan.scenario_hash[:12]}, not {expected[:12]}"
            )
        graph = GraphSpec(kind="edges", edges=plan.graph_edges)
        ctx = build_context(with_graph(scenario, graph))
        cost, determinants = replay_plan(plan, ctx)
        return ReplayReport(
            planner=plan.planner,
            reported_cost=plan.total_cost,
            replayed_cost=cost,
            matches=check_oracle(plan.total_cost, cost),
            determinants=determinants,
        )


def load_plan(path: Path) -> PlanResult:
    return PlanResult.model_validate_json(Path(path).read_text())


# Convenience function for simple usage
def run_scenario(
    scenario: Scenario,
    seed: int = 0,
    n_max: Optional[int] = None,
    planner: PlannerKind = "distributed",
) -> RunRecord:
    """
    Plan on a scenario with default settings.

    Example:
        >>> record = run_scenario(load_scenario("desk"), seed=3)
        >>> if record.success:
        ...     print(record.plan.horizon)
    """
    return PlanningWorkflow().run_plan(scenario, seed=seed, n_max=n_max, planner=planner)
