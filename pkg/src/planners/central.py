"""
Centralized baseline planner.

One tree over the joint pose of all robots, with a single shared belief
updated by a centralized Kalman filter that fuses every robot's
measurements. Used as the reference the distributed planner is compared
against.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from src.belief import InfoBelief, dkf_predict, full_det, full_log_det, satisfies
from src.bias import assign_target, f_V_biased, f_U_biased
from src.env import cached_field
from src.errors import InvalidArgumentError, NumericalDomainError
from src.models import Measurement, RobotPose, TargetBank, TargetModel, step_pose, symmetrize
from src.planners.context import PlanningContext
from src.planners.distributed import OpCounters, observe_all
from src.planners.samplers import draw, uniform
from src.results import PlanResult, PlanStats, RobotPath

logger = logging.getLogger(__name__)


def centralized_kf_update(
    belief: InfoBelief,
    all_measurements: Sequence[Sequence[Optional[Measurement]]],
    targets: Optional[Union[TargetBank, Sequence[TargetModel]]] = None,
) -> InfoBelief:
    """
    Kalman update of a shared belief with the measurements of every robot.

    Args:
        belief: Shared belief; predicted first when ``targets`` is given.
        all_measurements: One per-target measurement list per robot.
        targets: Target dynamics for the prediction step.

    Raises:
        InvalidArgumentError: If a measurement list does not cover every target.
        NumericalDomainError: If the result is not positive definite.
    """
    prior = dkf_predict(belief, targets) if targets is not None else belief
    omega = np.array(prior.omega)
    eta = np.einsum("mij,mj->mi", prior.omega, prior.mean)
    for robot_measurements in all_measurements:
        if len(robot_measurements) != prior.blocks:
            raise InvalidArgumentError(
                f"Expected {prior.blocks} measurement slots, got {len(robot_measurements)}"
            )
        for l, z in enumerate(robot_measurements):
            if z is None:
                continue
            row = np.asarray(z.row, dtype=float)
            omega[l] += np.outer(row, row) / z.variance
            eta[l] += row * (z.innovation + row @ prior.mean[l]) / z.variance
    omega = symmetrize(omega)
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as e:
        raise NumericalDomainError("Centralized information matrix is not positive definite") from e
    return InfoBelief(omega=omega, mean=np.linalg.solve(omega, eta[..., None])[..., 0])


@dataclass(eq=False)
class JointNode:
    """Joint state of all robots sharing one belief."""
    id: int
    poses: tuple[RobotPose, ...]
    belief: InfoBelief
    depth: int = 0
    parent: Optional[int] = None
    controls: Optional[tuple[int, ...]] = None
    cost: float = 0.0
    log_cost: float = 0.0
    children: list[int] = field(default_factory=list)
    _predicted: Optional[InfoBelief] = field(default=None, repr=False)

    def predicted(self, bank: TargetBank) -> InfoBelief:
        if self._predicted is None:
            self._predicted = dkf_predict(self.belief, bank)
        return self._predicted


class JointTree:
    """Tree over joint poses, grouped by the quantized pose of every robot."""

    def __init__(self, ctx: PlanningContext):
        self.ctx = ctx
        self.nodes: list[JointNode] = []
        self.groups: list[list[int]] = []
        self._group_of_key: dict[tuple, int] = {}
        self.goal_set: list[int] = []
        # Groups holding a node at the largest depth that may still be expanded.
        self.max_open_depth = -1
        self.deepest_groups: set[int] = set()

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def group_poses(self, k: int) -> tuple[RobotPose, ...]:
        return self.nodes[self.groups[k][0]].poses

    def add_node(self, node: JointNode) -> JointNode:
        self.nodes.append(node)
        if node.parent is not None:
            self.nodes[node.parent].children.append(node.id)
        key = tuple(self.ctx.quantize(p) for p in node.poses)
        k = self._group_of_key.setdefault(key, len(self.groups))
        if k == len(self.groups):
            self.groups.append([])
        self.groups[k].append(node.id)
        if self.ctx.depth_open(node.depth):
            if node.depth > self.max_open_depth:
                self.max_open_depth = node.depth
                self.deepest_groups = {k}
            elif node.depth == self.max_open_depth:
                self.deepest_groups.add(k)
        if satisfies(node.belief, self.ctx.thresholds):
            self.goal_set.append(node.id)
        return node

    def path_to(self, node_id: int) -> list[int]:
        path = []
        current: Optional[int] = node_id
        while current is not None:
            path.append(current)
            current = self.nodes[current].parent
        return path[::-1]


@dataclass
class CentralOutcome:
    tree: JointTree
    counters: OpCounters
    iteration_seconds: list[float] = field(default_factory=list)
    iterations: int = 0
    best_goal: Optional[int] = None
    first_goal_iteration: Optional[int] = None


def _control_masses(ctx: PlanningContext, tree: JointTree, k: int, robot: int) -> np.ndarray:
    """Per-robot control masses, steering toward the nearest unsatisfied target."""
    if ctx.bias is None:
        return uniform(len(ctx.primitives))
    driver = max((tree.nodes[m] for m in tree.groups[k]), key=lambda n: (n.depth, -n.id))
    pose = tree.group_poses(k)[robot]
    predicted = driver.predicted(ctx.bank)
    fields = [cached_field(ctx.workspace, tuple(mu)) for mu in predicted.mean]
    target = assign_target(
        pose.position, np.exp(driver.belief.log_dets), None, (), fields, ctx.thresholds
    )
    if target is None:
        return uniform(len(ctx.primitives))
    goal = (float(predicted.mean[target][0]), float(predicted.mean[target][1]))
    return f_U_biased(pose, ctx.primitives, fields[target], goal, ctx.sensor.range, ctx.bias, ctx.dt)


def build_central_tree(ctx: PlanningContext, n_max: int, seed: int) -> CentralOutcome:
    """
    Grow the joint tree for n_max iterations.

    The random stream is the first one spawned from ``seed``, the same stream
    robot 0 uses in the distributed planner.
    """
    for i, pose in enumerate(ctx.robot_poses):
        if not ctx.workspace.is_free(pose.x, pose.y):
            raise InvalidArgumentError(f"Initial pose of robot {i} is in collision: {pose}")

    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(ctx.n_robots)[0])
    tree = JointTree(ctx)
    tree.add_node(
        JointNode(
            id=0,
            poses=tuple(ctx.robot_poses),
            belief=ctx.prior,
            cost=full_det(ctx.prior),
            log_cost=full_log_det(ctx.prior),
        )
    )
    outcome = CentralOutcome(tree=tree, counters=OpCounters())
    if tree.goal_set:
        outcome.first_goal_iteration = 0
    counters = outcome.counters

    for n in range(n_max):
        start = time.perf_counter()
        masses = uniform(tree.group_count) if ctx.bias is None else f_V_biased(tree, ctx.bias)
        k = draw(masses, rng)
        controls = tuple(draw(_control_masses(ctx, tree, k, r), rng) for r in range(ctx.n_robots))
        counters.samples += 1

        poses = tuple(
            step_pose(p, ctx.primitives[u], ctx.dt) for p, u in zip(tree.group_poses(k), controls)
        )
        if not all(ctx.workspace.is_free(p.x, p.y) for p in poses):
            counters.rejections += 1
        else:
            members = [m for m in tree.groups[k] if ctx.depth_open(tree.nodes[m].depth)]
            if ctx.expansion_cap is not None and len(members) > ctx.expansion_cap:
                picked = rng.choice(len(members), size=ctx.expansion_cap, replace=False)
                members = [members[i] for i in sorted(picked)]
            for m in members:
                parent = tree.nodes[m]
                predicted = parent.predicted(ctx.bank)
                belief = centralized_kf_update(predicted, [observe_all(ctx, p, predicted) for p in poses])
                step_log = full_log_det(belief)
                tree.add_node(
                    JointNode(
                        id=len(tree.nodes),
                        poses=poses,
                        belief=belief,
                        depth=parent.depth + 1,
                        parent=parent.id,
                        controls=controls,
                        cost=parent.cost + math.exp(step_log),
                        log_cost=float(np.logaddexp(parent.log_cost, step_log)),
                    )
                )
                counters.expansions += 1
                counters.belief_updates += 1
                counters.fusion_terms += 1 + ctx.n_robots
        outcome.iteration_seconds.append(time.perf_counter() - start)
        outcome.iterations = n + 1
        if outcome.first_goal_iteration is None and tree.goal_set:
            outcome.first_goal_iteration = n + 1

    if tree.goal_set:
        outcome.best_goal = min(tree.goal_set, key=lambda g: (tree.nodes[g].cost, g))
    logger.info(
        "Built joint tree in %d iterations (%d nodes, %d goal nodes)",
        n_max,
        len(tree),
        len(tree.goal_set),
    )
    return outcome


def build_central_plan(
    outcome: CentralOutcome,
    ctx: PlanningContext,
    stats: PlanStats,
    seed: int,
    n_max: int,
    scenario_hash: str,
) -> PlanResult:
    """Plan along the cheapest goal node; the shared cost is counted once."""
    tree = outcome.tree
    if outcome.best_goal is None:
        raise InvalidArgumentError("The joint tree has no goal node")
    path = tree.path_to(outcome.best_goal)
    nodes = [tree.nodes[n] for n in path]
    cost = 0.0
    for node in nodes:
        cost += full_det(node.belief)
    dets = [[math.exp(ld) for ld in node.belief.log_dets] for node in nodes]
    paths = [
        RobotPath(
            robot=r,
            node_ids=list(path),
            poses=[(n.poses[r].x, n.poses[r].y, n.poses[r].theta) for n in nodes],
            controls=[None] + [n.controls[r] for n in nodes[1:]],
            cost=cost,
        )
        for r in range(ctx.n_robots)
    ]
    return PlanResult(
        planner="central",
        scenario_hash=scenario_hash,
        seed=seed,
        n_max=n_max,
        graph_edges=sorted(ctx.graph.edges),
        horizon=len(path) - 1,
        total_cost=cost,
        paths=paths,
        determinants=[dets for _ in range(ctx.n_robots)],
        stats=stats,
    )


def replay_central_beliefs(plan: PlanResult, ctx: PlanningContext) -> list[InfoBelief]:
    """Shared belief at each step of a central plan, recomputed from the prior."""
    beliefs = [ctx.prior]
    for t in range(1, plan.horizon + 1):
        poses = [RobotPose(*p.poses[t]) for p in plan.paths]
        predicted = dkf_predict(beliefs[-1], ctx.bank)
        beliefs.append(centralized_kf_update(predicted, [observe_all(ctx, p, predicted) for p in poses]))
    return beliefs


def replay_central_cost(plan: PlanResult, ctx: PlanningContext) -> float:
    cost = 0.0
    for belief in replay_central_beliefs(plan, ctx):
        cost += full_det(belief)
    return cost
