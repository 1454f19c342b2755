"""
Distributed tree construction.

Every robot grows its own tree in lockstep iterations. Within an iteration
a robot reads its neighbors' trees only as they stood at the previous
barrier, so results do not depend on how robots are scheduled across
worker threads.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from src.belief import InfoBelief, dkf_update
from src.bias import assign_target
from src.config import get_settings
from src.env import cached_field
from src.models import RobotPose, observe, step_pose
from src.planners.context import PlanningContext
from src.planners.samplers import SamplerSuite, draw, sample_control, sample_group
from src.planners.tree import (
    Tree,
    TreeNode,
    TreeSnapshot,
    accumulate,
    admissible_neighbor_nodes,
    init_tree,
    snapshot,
)

logger = logging.getLogger(__name__)


@dataclass
class OpCounters:
    """
    Work done while growing trees.

    ``fusion_terms`` counts the beliefs and measurement models combined in
    each update: the own belief, one per neighbor and one for the local
    sensor in the distributed planner; the shared belief and one per robot
    in the centralized one.
    """
    samples: int = 0
    rejections: int = 0
    expansions: int = 0
    belief_updates: int = 0
    fusion_terms: int = 0
    neighbor_fetches: int = 0

    def merge(self, other: "OpCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    @property
    def messages(self) -> int:
        # S-set entry sent, covariance received.
        return 2 * self.neighbor_fetches


@dataclass
class BuildOutcome:
    """Trees plus the bookkeeping collected while building them."""
    trees: list[Tree]
    counters: list[OpCounters]
    iteration_seconds: list[float] = field(default_factory=list)
    iterations: int = 0
    first_goal_iteration: list[Optional[int]] = field(default_factory=list)

    @property
    def total(self) -> OpCounters:
        total = OpCounters()
        for c in self.counters:
            total.merge(c)
        return total


def observe_all(ctx: PlanningContext, pose: RobotPose, predicted: InfoBelief) -> list:
    """Measurement of every target from pose, linearized at the predicted means."""
    return [observe(ctx.sensor, ctx.workspace, pose, predicted.mean[l]) for l in range(predicted.blocks)]


def fuse_step(
    ctx: PlanningContext,
    own_predicted: InfoBelief,
    neighbor_predicted: Sequence[InfoBelief],
    pose: RobotPose,
) -> InfoBelief:
    """One DKF step at pose from already predicted own and neighbor beliefs."""
    weights = ctx.weights.weights_for(own_predicted, neighbor_predicted)
    return dkf_update(own_predicted, neighbor_predicted, weights, observe_all(ctx, pose, own_predicted))


def root_assignment(ctx: PlanningContext, root: TreeNode) -> Optional[int]:
    predicted = root.predicted(ctx.bank)
    return assign_target(
        root.pose.position,
        np.exp(root.belief.log_dets),
        None,
        (),
        [cached_field(ctx.workspace, tuple(m)) for m in predicted.mean],
        ctx.thresholds,
    )


def extend(
    tree: Tree,
    k_rand: int,
    u_index: int,
    neighbor_snapshots: dict[int, TreeSnapshot],
    samplers: SamplerSuite,
    rng: np.random.Generator,
    counters: Optional[OpCounters] = None,
) -> list[int]:
    """
    Expand every member of group k_rand with primitive u_index.

    Returns:
        Ids of the nodes added; empty when the new pose is in collision or
        no member may be expanded.
    """
    ctx = tree.ctx
    counters = counters if counters is not None else OpCounters()
    p_new = step_pose(tree.group_pose(k_rand), ctx.primitives[u_index], ctx.dt)
    if not ctx.workspace.is_free(p_new.x, p_new.y):
        counters.rejections += 1
        return []

    members = [m for m in tree.groups[k_rand] if ctx.depth_open(tree.nodes[m].depth)]
    if ctx.expansion_cap is not None and len(members) > ctx.expansion_cap:
        picked = rng.choice(len(members), size=ctx.expansion_cap, replace=False)
        members = [members[i] for i in sorted(picked)]

    neighbor_ids = ctx.neighbor_lists[tree.robot]
    added = []
    for m in members:
        parent = tree.nodes[m]
        s_new: dict[int, int] = {}
        for j in neighbor_ids:
            snap = neighbor_snapshots[j]
            candidates = admissible_neighbor_nodes(parent, snap)
            masses = samplers.candidate_masses([snap.node(c) for c in candidates])
            s_new[j] = candidates[draw(masses, rng)]
            counters.neighbor_fetches += 1

        chosen = [neighbor_snapshots[j].node(s_new[j]) for j in neighbor_ids]
        belief = fuse_step(
            ctx,
            parent.predicted(ctx.bank),
            [n.predicted(ctx.bank) for n in chosen],
            p_new,
        )
        cost, log_cost = accumulate(parent, belief)
        node = tree.add_node(
            TreeNode(
                id=len(tree.nodes),
                robot=tree.robot,
                pose=p_new,
                belief=belief,
                depth=parent.depth + 1,
                parent=parent.id,
                control=u_index,
                s_set=s_new,
                cost=cost,
                log_cost=log_cost,
            )
        )
        if samplers.biased:
            predicted = node.predicted(ctx.bank)
            node.target = assign_target(
                p_new.position,
                np.exp(belief.log_dets),
                parent.target,
                [n.target for n in chosen],
                [cached_field(ctx.workspace, tuple(mu)) for mu in predicted.mean],
                ctx.thresholds,
            )
        counters.expansions += 1
        counters.belief_updates += 1
        counters.fusion_terms += len(neighbor_ids) + 2
        added.append(node.id)
    return added


def build_trees(
    ctx: PlanningContext,
    n_max: int,
    seed: int,
    threads: Optional[int] = None,
) -> BuildOutcome:
    """
    Grow one tree per robot for n_max lockstep iterations.

    Each robot draws from its own stream spawned from ``seed``, so the trees
    are identical for any thread count.

    Args:
        ctx: Planning inputs.
        n_max: Number of iterations.
        seed: Root seed of the per-robot streams.
        threads: Worker threads; defaults to the configured setting.

    Returns:
        BuildOutcome with the trees, per-robot counters and per-iteration
        wall time (the slowest robot of each iteration) and the first
        iteration at which each tree held a goal node.
    """
    settings = get_settings()
    threads = threads or settings.threads
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(ctx.n_robots)]
    samplers = SamplerSuite(ctx)

    trees = [init_tree(i, ctx.robot_poses[i], ctx.prior, ctx) for i in range(ctx.n_robots)]
    if samplers.biased:
        for tree in trees:
            tree.root.target = root_assignment(ctx, tree.root)
    outcome = BuildOutcome(
        trees=trees,
        counters=[OpCounters() for _ in trees],
        first_goal_iteration=[0 if t.goal_set else None for t in trees],
    )

    def grow(i: int, snaps: list[TreeSnapshot]) -> float:
        start = time.perf_counter()
        tree, rng, counters = trees[i], rngs[i], outcome.counters[i]
        k = sample_group(tree, samplers.group_masses, rng)
        u = sample_control(samplers.control_masses(tree, k), rng)
        counters.samples += 1
        extend(tree, k, u, {j: snaps[j] for j in ctx.neighbor_lists[i]}, samplers, rng, counters)
        return time.perf_counter() - start

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for n in range(n_max):
            snaps = [snapshot(t) for t in trees]
            if pool is None:
                durations = [grow(i, snaps) for i in range(ctx.n_robots)]
            else:
                durations = list(pool.map(lambda i: grow(i, snaps), range(ctx.n_robots)))
            outcome.iteration_seconds.append(max(durations))
            outcome.iterations = n + 1
            for i, tree in enumerate(trees):
                if outcome.first_goal_iteration[i] is None and tree.goal_set:
                    outcome.first_goal_iteration[i] = n + 1

            if settings.check_invariants:
                for tree in trees:
                    tree.check_invariants({j: trees[j] for j in ctx.neighbor_lists[tree.robot]})
            if logger.isEnabledFor(logging.DEBUG) and (n + 1) % 500 == 0:
                logger.debug(
                    "Iteration %d: nodes=%s goals=%s",
                    n + 1,
                    [len(t) for t in trees],
                    [len(t.goal_set) for t in trees],
                )
    finally:
        if pool is not None:
            pool.shutdown()

    logger.info(
        "Built %d trees in %d iterations (%d nodes, %d goal nodes)",
        len(trees),
        n_max,
        sum(len(t) for t in trees),
        sum(len(t.goal_set) for t in trees),
    )
    return outcome
