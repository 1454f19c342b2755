"""
Everything a planner needs to know about an experiment, resolved into
model objects.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from src.belief import InfoBelief, WeightScheme
from src.bias import BiasParams
from src.commgraph import CommGraph, neighbors
from src.env import Workspace
from src.errors import InvalidArgumentError
from src.models import MotionPrimitive, RobotPose, SensorModel, TargetBank, TargetModel

# Members of a sampled group expanded per iteration; None expands all of them.
DEFAULT_EXPANSION_CAP = 4


@dataclass(frozen=True, eq=False)
class PlanningContext:
    """Immutable planning inputs shared by every robot worker."""
    workspace: Workspace
    robot_poses: tuple[RobotPose, ...]
    primitives: tuple[MotionPrimitive, ...]
    sensor: SensorModel
    targets: tuple[TargetModel, ...]
    thresholds: tuple[float, ...]
    graph: CommGraph
    dt: float = 1.0
    weights: WeightScheme = field(default_factory=WeightScheme)
    bias: Optional[BiasParams] = None
    position_tolerance: Optional[float] = None
    heading_tolerance_deg: float = 1.0
    expansion_cap: Optional[int] = DEFAULT_EXPANSION_CAP
    max_depth: Optional[int] = None

    def __post_init__(self):
        if not self.primitives:
            raise InvalidArgumentError("Primitive set is empty")
        if len(self.thresholds) != len(self.targets):
            raise InvalidArgumentError(
                f"{len(self.thresholds)} thresholds given for {len(self.targets)} targets"
            )
        if any(delta <= 0 for delta in self.thresholds):
            raise InvalidArgumentError("Determinant thresholds must be positive")
        if self.graph.n_robots != len(self.robot_poses):
            raise InvalidArgumentError(
                f"Graph has {self.graph.n_robots} robots but {len(self.robot_poses)} poses were given"
            )
        if self.expansion_cap is not None and self.expansion_cap < 1:
            raise InvalidArgumentError(f"expansion_cap must be >= 1, got {self.expansion_cap}")
        if self.max_depth is not None and self.max_depth < 0:
            raise InvalidArgumentError(f"max_depth must be >= 0, got {self.max_depth}")

    @property
    def n_robots(self) -> int:
        return len(self.robot_poses)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @cached_property
    def bank(self) -> TargetBank:
        return TargetBank.from_models(list(self.targets))

    @cached_property
    def prior(self) -> InfoBelief:
        return InfoBelief.from_targets(self.targets)

    @cached_property
    def neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(neighbors(self.graph, i)) for i in range(self.n_robots))

    @property
    def quantum(self) -> float:
        return self.position_tolerance or self.workspace.resolution

    @property
    def heading_bins(self) -> int:
        return max(1, round(360.0 / self.heading_tolerance_deg))

    def depth_open(self, depth: int) -> bool:
        """True iff nodes at this depth may still be expanded."""
        return self.max_depth is None or depth < self.max_depth

    def quantize(self, pose: RobotPose) -> tuple[int, int, int]:
        """Group key of a pose: position rounded to the tolerance, heading to its bin."""
        q = self.quantum
        heading = round(math.degrees(pose.theta) / self.heading_tolerance_deg) % self.heading_bins
        return (math.floor(pose.x / q + 0.5), math.floor(pose.y / q + 0.5), heading)
