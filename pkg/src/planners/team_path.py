"""
Team plan extraction and replay.

A goal node of one robot fixes, through the S-sets stored along its path,
which nodes its neighbors must follow; those neighbors in turn fix their
own neighbors, and so on across the communication graph. The cheapest such
team path per connected component becomes the plan.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx

from src.belief import InfoBelief, dkf_predict, full_det
from src.errors import InternalConsistencyError, UnresolvableCandidateError
from src.models import RobotPose
from src.planners.context import PlanningContext
from src.planners.distributed import BuildOutcome, fuse_step
from src.planners.tree import Tree, TreeNode
from src.results import NodeRecord, PlanResult, PlanStats, RobotPath

logger = logging.getLogger(__name__)


@dataclass
class Extraction:
    """Chosen team paths plus candidate bookkeeping."""
    paths: Optional[dict[int, list[int]]] = None
    horizon: int = 0
    candidates: int = 0
    skipped: int = 0
    messages: int = 0
    component_horizons: list[int] = field(default_factory=list)


def _imposed_chain(path: list[TreeNode], j: int) -> list[int]:
    """Nodes of robot j referenced by path at time steps 1..t_k, shifted one step back."""
    return [0 if node.is_root else node.s_set[j] for node in path[1:]]


def _complete(tree: Tree, chain: list[int], length: int) -> list[int]:
    """Extend chain to length with cheapest children, holding the last node at leaves."""
    path = list(chain) or [0]
    while len(path) < length:
        kids = tree.nodes[path[-1]].children
        if kids:
            path.append(min(kids, key=lambda c: (tree.nodes[c].cost, c)))
        else:
            path.append(path[-1])
    return path


def resolve_team_path(
    initiator: int,
    goal_id: int,
    trees: list[Tree],
    ctx: PlanningContext,
) -> dict[int, list[int]]:
    """
    Paths of every robot connected to the initiator, consistent with the
    S-sets along the initiator's root-to-goal path.

    Returns:
        Robot -> node ids, each of length depth(goal) + 1.

    Raises:
        UnresolvableCandidateError: If two resolved neighbors impose different
            chains on the same robot.
    """
    own = trees[initiator].path_to(goal_id)
    length = len(own)
    resolved = {initiator: own}
    order = [initiator] + [
        j for j, _ in sorted(
            nx.single_source_shortest_path_length(ctx.graph.nx_graph, initiator).items(),
            key=lambda item: (item[1], item[0]),
        )
        if j != initiator
    ]

    for j in order[1:]:
        chains = []
        for r in ctx.neighbor_lists[j]:
            if r in resolved:
                nodes = [trees[r].nodes[n] for n in resolved[r]]
                chains.append(_imposed_chain(nodes, j))
        if not chains:
            raise InternalConsistencyError(f"Robot {j} was reached before any of its neighbors")
        if any(c != chains[0] for c in chains[1:]):
            raise UnresolvableCandidateError(j, f"Neighbors of robot {j} impose conflicting node chains")
        resolved[j] = _complete(trees[j], chains[0], length)
    return resolved


def path_cost(tree: Tree, path: list[int]) -> float:
    cost = 0.0
    for n in path:
        cost += full_det(tree.nodes[n].belief)
    return cost


def extract_team_plan(outcome: BuildOutcome, ctx: PlanningContext) -> Extraction:
    """
    Cheapest team path in every connected component of the graph.

    Candidates are the goal nodes of the component's robots, tried in robot
    then node id order; ties keep the first candidate. Components with
    shorter plans are padded by holding their final nodes.

    Returns:
        Extraction whose ``paths`` is None when some component has no goal node
        or no resolvable candidate.
    """
    trees = outcome.trees
    extraction = Extraction()
    chosen: dict[int, list[int]] = {}

    for component in ctx.graph.components():
        best: Optional[tuple[float, dict[int, list[int]]]] = None
        for i in component:
            hops = nx.single_source_shortest_path_length(ctx.graph.nx_graph, i)
            broadcast = 2 * sum(hops.values())
            for goal_id in trees[i].goal_set:
                extraction.candidates += 1
                extraction.messages += broadcast
                try:
                    team = resolve_team_path(i, goal_id, trees, ctx)
                except UnresolvableCandidateError as e:
                    extraction.skipped += 1
                    logger.debug("Skipped goal %d of robot %d: %s", goal_id, i, e)
                    continue
                cost = sum(path_cost(trees[r], team[r]) for r in component)
                if best is None or cost < best[0]:
                    best = (cost, team)
        if best is None:
            logger.info("No plan for robots %s", component)
            return extraction
        chosen.update(best[1])
        extraction.component_horizons.append(len(next(iter(best[1].values()))) - 1)

    extraction.horizon = max(extraction.component_horizons)
    extraction.paths = {
        r: path + [path[-1]] * (extraction.horizon + 1 - len(path)) for r, path in sorted(chosen.items())
    }
    return extraction


def support_records(trees: list[Tree], paths: dict[int, list[int]]) -> list[NodeRecord]:
    """Path nodes closed under parents and S-set references."""
    pending = deque((r, n) for r, path in paths.items() for n in set(path))
    seen: set[tuple[int, int]] = set()
    while pending:
        key = pending.popleft()
        if key in seen:
            continue
        seen.add(key)
        node = trees[key[0]].nodes[key[1]]
        if node.parent is not None:
            pending.append((key[0], node.parent))
        pending.extend(node.s_set.items())

    records = []
    for r, n in sorted(seen):
        node = trees[r].nodes[n]
        records.append(
            NodeRecord(
                robot=r,
                id=n,
                parent=node.parent,
                depth=node.depth,
                x=node.pose.x,
                y=node.pose.y,
                theta=node.pose.theta,
                s_set=dict(node.s_set),
            )
        )
    return records


def robot_path(tree: Tree, path: list[int]) -> RobotPath:
    nodes = [tree.nodes[n] for n in path]
    controls = [None] + [
        cur.control if cur.id != prev.id else None for prev, cur in zip(nodes, nodes[1:])
    ]
    return RobotPath(
        robot=tree.robot,
        node_ids=list(path),
        poses=[(n.pose.x, n.pose.y, n.pose.theta) for n in nodes],
        controls=controls,
        cost=path_cost(tree, path),
    )


def build_plan_result(
    outcome: BuildOutcome,
    extraction: Extraction,
    ctx: PlanningContext,
    stats: PlanStats,
    seed: int,
    n_max: int,
    scenario_hash: str,
) -> PlanResult:
    trees = outcome.trees
    if extraction.paths is None:
        raise InternalConsistencyError("Cannot build a plan result without team paths")
    paths = [robot_path(trees[r], extraction.paths[r]) for r in range(ctx.n_robots)]
    total = 0.0
    for p in paths:
        total += p.cost
    return PlanResult(
        planner="distributed",
        scenario_hash=scenario_hash,
        seed=seed,
        n_max=n_max,
        graph_edges=sorted(ctx.graph.edges),
        horizon=extraction.horizon,
        total_cost=total,
        paths=paths,
        determinants=[
            [[math.exp(ld) for ld in trees[p.robot].nodes[n].belief.log_dets] for n in p.node_ids]
            for p in paths
        ],
        stats=stats,
        support=support_records(trees, extraction.paths),
    )


def replay_beliefs(plan: PlanResult, ctx: PlanningContext) -> dict[tuple[int, int], InfoBelief]:
    """Recompute the belief of every support node from the priors."""
    records = sorted(plan.support, key=lambda rec: (rec.depth, rec.robot, rec.id))
    beliefs: dict[tuple[int, int], InfoBelief] = {}
    predicted: dict[tuple[int, int], InfoBelief] = {}

    def predict(key: tuple[int, int]) -> InfoBelief:
        if key not in predicted:
            if key not in beliefs:
                raise InternalConsistencyError(f"Plan support is missing node {key[1]} of robot {key[0]}")
            predicted[key] = dkf_predict(beliefs[key], ctx.bank)
        return predicted[key]

    for rec in records:
        if rec.parent is None:
            beliefs[(rec.robot, rec.id)] = ctx.prior
            continue
        beliefs[(rec.robot, rec.id)] = fuse_step(
            ctx,
            predict((rec.robot, rec.parent)),
            [predict((j, rec.s_set[j])) for j in ctx.neighbor_lists[rec.robot]],
            RobotPose(rec.x, rec.y, rec.theta),
        )
    return beliefs


def replay_cost_oracle(plan: PlanResult, ctx: PlanningContext) -> float:
    """
    Team cost of a distributed plan recomputed from the priors along its
    fixed paths, independent of the trees that produced it.
    """
    beliefs = replay_beliefs(plan, ctx)
    total = 0.0
    for p in plan.paths:
        cost = 0.0
        for n in p.node_ids:
            cost += full_det(beliefs[(p.robot, n)])
        total += cost
    return total
