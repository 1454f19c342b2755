"""
Per-robot search trees over (pose, belief, neighbor references).

Nodes are stored append-only with increasing ids, so a frozen view of a
tree at an iteration barrier is just its size at that moment.
"""

import logging
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.belief import InfoBelief, dkf_predict, full_det, full_log_det, satisfies
from src.errors import InternalConsistencyError, InvalidArgumentError
from src.models import RobotPose, TargetBank
from src.planners.context import PlanningContext

logger = logging.getLogger(__name__)

GroupKey = tuple[int, int, int]


@dataclass(eq=False)
class TreeNode:
    """
    Planner state of one robot at one time index.

    Attributes:
        s_set: Neighbor robot -> node id in that neighbor's tree whose belief
            was fused into this node.
        control: Index of the primitive that produced this node.
        cost: Accumulated sum of full covariance determinants from the root.
        log_cost: log(cost), accumulated with logaddexp.
        target: Assigned target when biased sampling is on.
    """
    id: int
    robot: int
    pose: RobotPose
    belief: InfoBelief
    depth: int = 0
    parent: Optional[int] = None
    control: Optional[int] = None
    s_set: dict[int, int] = field(default_factory=dict)
    cost: float = 0.0
    log_cost: float = 0.0
    target: Optional[int] = None
    children: list[int] = field(default_factory=list)
    _predicted: Optional[InfoBelief] = field(default=None, repr=False)

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def predicted(self, bank: TargetBank) -> InfoBelief:
        """One-step prediction of this node's belief, computed once."""
        if self._predicted is None:
            self._predicted = dkf_predict(self.belief, bank)
        return self._predicted


class Tree:
    """Search tree of one robot with pose groups and a goal set."""

    def __init__(self, robot: int, ctx: PlanningContext):
        self.robot = robot
        self.ctx = ctx
        self.nodes: list[TreeNode] = []
        self.groups: list[list[int]] = []
        self._group_of_key: dict[GroupKey, int] = {}
        self.group_of_node: list[int] = []
        self.goal_set: list[int] = []
        # Groups holding a node at the largest depth that may still be expanded.
        self.max_open_depth = -1
        self.deepest_groups: set[int] = set()

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def node(self, node_id: int) -> TreeNode:
        if not 0 <= node_id < len(self.nodes):
            raise InternalConsistencyError(f"Robot {self.robot} has no node {node_id}")
        return self.nodes[node_id]

    def group_pose(self, k: int) -> RobotPose:
        """Pose every member of group k expands from (its first node's pose)."""
        return self.nodes[self.groups[k][0]].pose

    def add_node(self, node: TreeNode) -> TreeNode:
        """Insert a node, linking it to its parent, its pose group and the goal set."""
        if node.id != len(self.nodes):
            raise InternalConsistencyError(f"Node id {node.id} breaks the append order of robot {self.robot}")
        self.nodes.append(node)
        if node.parent is not None:
            self.nodes[node.parent].children.append(node.id)

        key = self.ctx.quantize(node.pose)
        k = self._group_of_key.get(key)
        if k is None:
            k = len(self.groups)
            self._group_of_key[key] = k
            self.groups.append([])
        self.groups[k].append(node.id)
        self.group_of_node.append(k)

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
        """Node ids from the root to node_id."""
        path = []
        current: Optional[int] = node_id
        while current is not None:
            path.append(current)
            current = self.nodes[current].parent
        return path[::-1]

    def check_invariants(self, neighbor_trees: Optional[dict[int, "Tree"]] = None) -> None:
        """
        Verify the structural invariants of the tree.

        Raises:
            InternalConsistencyError: On the first violated invariant.
        """
        ctx = self.ctx
        expected_neighbors = set(ctx.neighbor_lists[self.robot])
        goals = set(self.goal_set)
        seen = set()
        for k, members in enumerate(self.groups):
            keys = {ctx.quantize(self.nodes[m].pose) for m in members}
            if len(keys) != 1:
                raise InternalConsistencyError(f"Group {k} of robot {self.robot} mixes poses")
            seen.update(members)
        if seen != set(range(len(self.nodes))):
            raise InternalConsistencyError(f"Groups of robot {self.robot} do not partition its nodes")

        for node in self.nodes:
            if node.is_root:
                if node.depth != 0 or node.s_set or not math.isclose(node.cost, full_det(node.belief), rel_tol=1e-12):
                    raise InternalConsistencyError(f"Root of robot {self.robot} is malformed")
            else:
                parent = self.nodes[node.parent]
                if node.depth != parent.depth + 1:
                    raise InternalConsistencyError(f"Node {node.id} depth does not follow its parent")
                step = full_det(node.belief)
                if not math.isclose(node.cost - parent.cost, step, rel_tol=1e-9, abs_tol=1e-300):
                    raise InternalConsistencyError(f"Node {node.id} cost breaks the accumulation rule")
                if set(node.s_set) != expected_neighbors:
                    raise InternalConsistencyError(f"Node {node.id} S-set does not cover the neighbors")
                if neighbor_trees is not None:
                    self._check_references(node, parent, neighbor_trees)

            in_goal = satisfies(node.belief, ctx.thresholds)
            if in_goal != (node.id in goals):
                raise InternalConsistencyError(f"Goal membership of node {node.id} is wrong")

    def _check_references(self, node: TreeNode, parent: TreeNode, neighbor_trees: dict[int, "Tree"]) -> None:
        for j, ref in node.s_set.items():
            other = neighbor_trees[j]
            target = other.node(ref)
            if target.depth > node.depth - 1:
                raise InternalConsistencyError(f"Node {node.id} references a too-deep node of robot {j}")
            if parent.is_root:
                if ref != 0:
                    raise InternalConsistencyError(f"Node {node.id} must reference the root of robot {j}")
            else:
                previous = parent.s_set[j]
                if ref != previous and target.parent != previous:
                    raise InternalConsistencyError(
                        f"Node {node.id} reference to robot {j} is neither the parent's reference nor its child"
                    )


@dataclass(frozen=True)
class TreeSnapshot:
    """A tree as it stood at the last iteration barrier."""
    tree: Tree
    size: int

    @property
    def robot(self) -> int:
        return self.tree.robot

    def node(self, node_id: int) -> TreeNode:
        if not 0 <= node_id < self.size:
            raise InternalConsistencyError(f"Reference to node {node_id} of robot {self.robot} is dangling")
        return self.tree.nodes[node_id]

    def children(self, node_id: int) -> list[int]:
        kids = self.node(node_id).children
        return kids[: bisect_left(kids, self.size)]


def snapshot(tree: Tree) -> TreeSnapshot:
    return TreeSnapshot(tree=tree, size=len(tree.nodes))


def init_tree(robot: int, pose0: RobotPose, prior_belief: InfoBelief, ctx: PlanningContext) -> Tree:
    """
    Tree holding only the root state.

    Raises:
        InvalidArgumentError: If pose0 is in collision.
    """
    if not ctx.workspace.is_free(pose0.x, pose0.y):
        raise InvalidArgumentError(f"Initial pose of robot {robot} is in collision: {pose0}")
    cost = full_det(prior_belief)
    tree = Tree(robot, ctx)
    tree.add_node(
        TreeNode(
            id=0,
            robot=robot,
            pose=pose0,
            belief=prior_belief,
            cost=cost,
            log_cost=full_log_det(prior_belief),
        )
    )
    return tree


def admissible_neighbor_nodes(own_node: TreeNode, neighbor: TreeSnapshot) -> list[int]:
    """
    Neighbor nodes own_node's child may fuse with.

    The root pairs with the neighbor's root. Any other node pairs with the
    children of the node it referenced, or with that node itself when it has
    no children yet.

    Raises:
        InternalConsistencyError: If the stored reference is dangling.
    """
    if own_node.is_root:
        return [0]
    j = neighbor.robot
    if j not in own_node.s_set:
        raise InternalConsistencyError(f"Node {own_node.id} of robot {own_node.robot} has no reference to robot {j}")
    ref = own_node.s_set[j]
    kids = neighbor.children(ref)
    return list(kids) if kids else [ref]


def accumulate(parent: TreeNode, belief: InfoBelief) -> tuple[float, float]:
    """Cost and log-cost of a child of parent holding belief."""
    step_log = full_log_det(belief)
    return parent.cost + math.exp(step_log), float(np.logaddexp(parent.log_cost, step_log))
