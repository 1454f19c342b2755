"""
Target-tracking mass functions and on-the-fly target assignment.

The biased samplers favor deep groups, controls that drive the robot
toward its assigned target, and the most certain neighbor node, while
keeping a strictly positive floor on every outcome.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from src.env import DistanceField
from src.errors import InvalidArgumentError
from src.models import MotionPrimitive, RobotPose, step_pose

if TYPE_CHECKING:
    from src.planners.tree import Tree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BiasParams:
    """Probabilities of picking the preferred group, control and neighbor node."""
    p_v: float = 0.7
    p_u: float = 0.7
    p_s: float = 0.7

    def __post_init__(self):
        for name in ("p_v", "p_u", "p_s"):
            value = getattr(self, name)
            if not 0.5 < value < 1.0:
                raise InvalidArgumentError(f"{name} must lie strictly inside (0.5, 1), got {value}")


def favor_one(size: int, preferred: int, p: float) -> np.ndarray:
    """Mass (1 - p)/size on every outcome plus p on the preferred one."""
    masses = np.full(size, (1.0 - p) / size)
    masses[preferred] += p
    return masses


def f_V_biased(tree: "Tree", params: BiasParams) -> np.ndarray:
    """
    Group distribution that puts mass p_v on the groups holding a node at the
    largest expandable depth and spreads the rest over the other groups.
    Uniform when no group, or every group, is favored.
    """
    k = tree.group_count
    deepest = tree.deepest_groups
    if not deepest or len(deepest) == k:
        return np.full(k, 1.0 / k)
    masses = np.full(k, (1.0 - params.p_v) / (k - len(deepest)))
    masses[sorted(deepest)] = params.p_v / len(deepest)
    return masses


def best_control(
    pose: RobotPose,
    primitives: Sequence[MotionPrimitive],
    target_field: DistanceField,
    dt: float,
) -> tuple[int, float]:
    """Index of the primitive whose successor is geodesically closest to the field source."""
    best, best_distance = 0, np.inf
    w = target_field.workspace
    for idx, u in enumerate(primitives):
        nxt = step_pose(pose, u, dt)
        distance = target_field.at(nxt.x, nxt.y) if w.in_bounds(nxt.x, nxt.y) else np.inf
        if distance < best_distance:
            best, best_distance = idx, distance
    return best, float(best_distance)


def f_U_biased(
    pose: RobotPose,
    primitives: Sequence[MotionPrimitive],
    assigned_target_field: DistanceField,
    predicted_target: tuple[float, float],
    sensing_range: float,
    params: BiasParams,
    dt: float = 1.0,
) -> np.ndarray:
    """
    Control distribution favoring the primitive that best approaches the
    assigned target. Uniform once the target is within sensing range, or when
    no successor can reach it.

    ``predicted_target`` is the source of ``assigned_target_field``; it is kept
    in the signature for logging.
    """
    n = len(primitives)
    if n == 0:
        raise InvalidArgumentError("Primitive set is empty")
    u_star, distance = best_control(pose, primitives, assigned_target_field, dt)
    if not np.isfinite(distance) or distance <= sensing_range:
        return np.full(n, 1.0 / n)
    logger.debug("Control %d approaches target at %s (%.3f m)", u_star, predicted_target, distance)
    return favor_one(n, u_star, params.p_u)


def f_S_biased(candidate_log_dets: Sequence[float], params: BiasParams) -> np.ndarray:
    """
    Candidate distribution favoring the neighbor node with the smallest
    covariance determinant. Candidates are ordered by node id, so the first
    minimum is the lowest id.
    """
    if len(candidate_log_dets) == 0:
        raise InvalidArgumentError("Candidate set is empty")
    if len(candidate_log_dets) == 1:
        return np.ones(1)
    return favor_one(len(candidate_log_dets), int(np.argmin(candidate_log_dets)), params.p_s)


def assign_target(
    position: tuple[float, float],
    block_dets: Sequence[float],
    parent_assignment: Optional[int],
    occupied: Iterable[Optional[int]],
    target_fields: Sequence[DistanceField],
    thresholds: Sequence[float],
) -> Optional[int]:
    """
    Greedy target assignment for a new node.

    Targets are visited by increasing geodesic distance from ``position``; the
    first one that is neither satisfied nor occupied by a sampled neighbor
    node is returned. Otherwise the parent's assignment is kept.

    Args:
        position: The new node's robot position.
        block_dets: det(Sigma_l) of the new node's belief for every target.
        parent_assignment: Target assigned to the parent node.
        occupied: Targets assigned to the neighbor nodes sampled into the S-set.
        target_fields: Distance field of each predicted target position.
        thresholds: Per-target determinant thresholds.

    Returns:
        The assigned target index, or None when nothing was ever assigned.
    """
    distances = [f.at(*position) for f in target_fields]
    ordered = np.argsort(distances, kind="stable")
    taken = {l for l in occupied if l is not None}
    for l in ordered:
        l = int(l)
        if block_dets[l] > thresholds[l] and l not in taken:
            return l
    return parent_assignment
