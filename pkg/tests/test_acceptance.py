"""
End-to-end statistical checks of the planners.

The heavy ones are marked ``slow``; deselect them with ``-m "not slow"``.
"""

import math

import numpy as np
import pytest
from scipy.stats import binomtest

from src.belief import dkf_predict, full_det, satisfies
from src.commgraph import CommGraph
from src.models import step_pose
from src.planners.central import build_central_tree
from src.planners.distributed import build_trees, fuse_step
from src.planners.team_path import extract_team_plan, path_cost
from src.scenario import GraphSpec, build_context, load_scenario, parse_graph_option, with_population
from src.workflow import PlanningWorkflow, check_oracle
from tests.conftest import make_context, pair_scenario


def horizon_or_inf(record):
    return record.plan.horizon if record.success else math.inf


def success_counts(firsts, budgets):
    return [sum(f is not None and f <= n for f in firsts) for n in budgets]


@pytest.mark.slow
class TestCompleteness:
    """A tree grown for n iterations is a prefix of the same seed grown longer."""

    BUDGETS = (100, 500, 2000)
    TRIALS = 100

    def check_rates(self, counts):
        intervals = [binomtest(k, self.TRIALS).proportion_ci(confidence_level=0.95) for k in counts]
        for k, wider in zip(counts, intervals[1:]):
            assert k / self.TRIALS <= wider.high
        assert counts[-1] / self.TRIALS >= 0.95

    def test_distributed_success_rate_grows(self):
        """Should reach a goal more often as the distributed budget grows."""
        ctx = build_context(load_scenario("desk"))
        firsts = [
            build_trees(ctx, n_max=self.BUDGETS[-1], seed=s).first_goal_iteration[0] for s in range(self.TRIALS)
        ]
        self.check_rates(success_counts(firsts, self.BUDGETS))

    def test_central_success_rate_grows(self):
        """Should reach a goal more often as the centralized budget grows."""
        ctx = build_context(load_scenario("desk"))
        firsts = [
            build_central_tree(ctx, n_max=self.BUDGETS[-1], seed=s).first_goal_iteration for s in range(self.TRIALS)
        ]
        self.check_rates(success_counts(firsts, self.BUDGETS))


def lattice_context():
    """One robot on a 0.5 m grid with right-angle turns, so poses stay on a finite lattice."""
    return make_context(
        robots=((1.0, 1.0, 0.0),),
        targets=((2.0, 1.3),),
        width=4.0,
        height=4.0,
        delta=2.6e-4,
        bias=False,
        speeds=[0.5, 1.0],
        turn_rates=[0, 90, -90],
        max_depth=4,
        expansion_cap=1,
    )


def brute_force_cost(ctx, depth_limit):
    """Cheapest cost to any goal state over every control sequence of bounded length."""
    best = math.inf

    def visit(pose, belief, cost, depth):
        nonlocal best
        if satisfies(belief, ctx.thresholds):
            best = min(best, cost)
            return
        if depth == depth_limit or cost >= best:
            return
        predicted = dkf_predict(belief, ctx.bank)
        for u in ctx.primitives:
            nxt = step_pose(pose, u, ctx.dt)
            if not ctx.workspace.is_free(nxt.x, nxt.y):
                continue
            child = fuse_step(ctx, predicted, [], nxt)
            visit(nxt, child, cost + full_det(child), depth + 1)

    visit(ctx.robot_poses[0], ctx.prior, full_det(ctx.prior), 0)
    return best


@pytest.mark.slow
class TestOptimality:
    """Convergence to the cheapest plan on a small lattice."""

    def test_converges_to_brute_force_optimum(self):
        """Should find the exhaustive-search optimum in most seeds."""
        ctx = lattice_context()
        optimum = brute_force_cost(ctx, 4)
        assert math.isfinite(optimum)
        hits = 0
        for seed in range(100):
            outcome = build_trees(ctx, n_max=10_000, seed=seed)
            extraction = extract_team_plan(outcome, ctx)
            if extraction.paths is None:
                continue
            cost = path_cost(outcome.trees[0], extraction.paths[0])
            assert cost >= optimum * (1 - 1e-9)
            hits += math.isclose(cost, optimum, rel_tol=1e-9)
        assert hits >= 90


class TestComplexity:
    """
    Fusion work per belief update as the team grows with M = N.

    Per-iteration work is updates per iteration times terms per update. The
    first factor is bounded by the expansion cap and shrinks with collision
    rejections, so the comparison is made on the second.
    """

    SIZES = (4, 8, 16)

    def contexts(self):
        template = load_scenario("bench_template")
        for n in self.SIZES:
            scenario = with_population(template, n, n, seed=n)
            scenario = scenario.model_copy(
                update={"graph": GraphSpec(kind="random", avg_degree=2.0, seed=n, max_degree=3)}
            )
            yield build_context(scenario)

    def test_fusion_work_per_update(self):
        """Should keep distributed work flat in N while centralized work grows at least threefold."""
        distributed, central = [], []
        for ctx in self.contexts():
            assert ctx.n_targets == ctx.n_robots
            assert max(len(n) for n in ctx.neighbor_lists) <= 3

            outcome = build_trees(ctx, n_max=15, seed=0)
            d = outcome.total
            assert d.belief_updates > 0
            # Counters agree with what the trees hold: own belief, own sensor, one term per S-set entry.
            assert d.fusion_terms == sum(2 + len(node.s_set) for t in outcome.trees for node in t.nodes[1:])

            joint = build_central_tree(ctx, n_max=40, seed=0)
            c = joint.counters
            assert c.belief_updates == len(joint.tree) - 1 > 0

            distributed.append(d.fusion_terms / d.belief_updates)
            central.append(c.fusion_terms / c.belief_updates)

        assert distributed[-1] / distributed[0] < 2.0
        assert central[-1] / central[0] >= 3.0
        ratios = [c / d for c, d in zip(central, distributed)]
        assert ratios[-1] > ratios[0]


@pytest.mark.slow
class TestGraphDensity:
    """Plan horizons across graph densities."""

    def test_more_links_shorter_plans(self):
        """Should produce shorter plans on denser communication graphs."""
        scenario = load_scenario("desk_team")
        workflow = PlanningWorkflow(threads=1)
        means = {}
        for option in ("full", "random:2:0", "none"):
            horizons = [
                horizon_or_inf(workflow.run_plan(scenario, seed=s, graph=parse_graph_option(option)))
                for s in range(20)
            ]
            means[option] = np.mean(horizons)
        assert means["full"] <= means["random:2:0"] <= means["none"]
        assert means["full"] < means["none"]


@pytest.mark.slow
class TestPlanVerification:
    """Replay checks over many planned runs."""

    def test_fifty_plans_replay_and_reach_thresholds(self):
        """Should replay every plan to its reported cost and reach the thresholds."""
        workflow = PlanningWorkflow(threads=1)
        plans = 0
        for seed in range(50):
            graph = GraphSpec(kind="full" if seed % 2 == 0 else "none")
            scenario = pair_scenario()
            record = workflow.run_plan(scenario, seed=seed, graph=graph)
            if not record.success:
                continue
            plans += 1
            plan = record.plan
            assert check_oracle(plan.total_cost, record.oracle_cost)
            deltas = scenario.thresholds()
            components = CommGraph.full(2).components() if graph.kind == "full" else [[0], [1]]
            for component in components:
                finals = [plan.determinants[r][-1] for r in component]
                assert any(all(det <= d for det, d in zip(final, deltas)) for final in finals)
        assert plans >= 45


class TestDeterminism:
    """Output bytes across worker counts."""

    @pytest.mark.parametrize("seed", range(10))
    def test_plan_bytes_do_not_depend_on_threads(self, seed):
        """Should write the same plan bytes for any worker count."""
        workflow = PlanningWorkflow(threads=1)
        scenario = pair_scenario()
        outputs = set()
        for threads in (1, 2, 8):
            record = workflow.run_plan(scenario, seed=seed, n_max=40, threads=threads)
            outputs.add(record.plan.model_dump_json(indent=2) if record.plan else record.stats.model_dump_json())
        assert len(outputs) == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
