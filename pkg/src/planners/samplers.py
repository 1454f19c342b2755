"""
Mass functions used to grow the trees.

Without bias parameters every sampler is uniform over its support; with
them, the group, control and neighbor-node samplers follow the
target-tracking rules in ``src.bias``.
"""

from typing import Callable, Sequence

import numpy as np

from src.belief import full_log_det
from src.bias import f_S_biased, f_U_biased, f_V_biased
from src.env import cached_field
from src.planners.context import PlanningContext
from src.planners.tree import Tree, TreeNode


def uniform(size: int) -> np.ndarray:
    return np.full(size, 1.0 / size)


def draw(masses: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn from a discrete distribution."""
    return int(rng.choice(len(masses), p=masses))


def sample_group(tree: Tree, f_V: Callable[[Tree], np.ndarray], rng: np.random.Generator) -> int:
    return draw(f_V(tree), rng)


def sample_control(f_U: np.ndarray, rng: np.random.Generator) -> int:
    """Index of a primitive drawn from the control masses."""
    return draw(f_U, rng)


class SamplerSuite:
    """The group (f_V), control (f_U) and neighbor-node (f_Q) samplers of one planner."""

    def __init__(self, ctx: PlanningContext):
        self.ctx = ctx
        self.bias = ctx.bias

    @property
    def biased(self) -> bool:
        return self.bias is not None

    def group_masses(self, tree: Tree) -> np.ndarray:
        if self.bias is None:
            return uniform(tree.group_count)
        return f_V_biased(tree, self.bias)

    def control_masses(self, tree: Tree, k: int) -> np.ndarray:
        """Control masses for group k, steered by its deepest member's assigned target."""
        ctx = self.ctx
        if self.bias is None:
            return uniform(len(ctx.primitives))
        driver = max((tree.nodes[m] for m in tree.groups[k]), key=lambda n: (n.depth, -n.id))
        return self.steer(tree.group_pose(k), driver)

    def steer(self, pose, driver: TreeNode) -> np.ndarray:
        ctx = self.ctx
        if self.bias is None or driver.target is None:
            return uniform(len(ctx.primitives))
        predicted = driver.predicted(ctx.bank).mean[driver.target]
        goal = (float(predicted[0]), float(predicted[1]))
        return f_U_biased(
            pose,
            ctx.primitives,
            cached_field(ctx.workspace, goal),
            goal,
            ctx.sensor.range,
            self.bias,
            ctx.dt,
        )

    def candidate_masses(self, candidates: Sequence[TreeNode]) -> np.ndarray:
        if self.bias is None:
            return uniform(len(candidates))
        return f_S_biased([full_log_det(c.belief) for c in candidates], self.bias)
