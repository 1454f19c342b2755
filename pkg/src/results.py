"""
Pydantic models for planner output.

``PlanResult`` is what ``plan.json`` holds. It carries no wall-clock data,
so a fixed scenario and seed always serialize to the same bytes; timings
live in ``RunRecord`` and go to ``run_meta.json``.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field

PlannerKind = Literal["distributed", "central"]

RESULT_SCHEMA_VERSION = "1"


class NodeRecord(BaseModel):
    """A tree node needed to replay a plan."""
    robot: int = Field(..., description="Robot owning the node (0 for joint nodes)")
    id: int = Field(..., description="Node id within the robot's tree")
    parent: Optional[int] = Field(default=None, description="Parent node id")
    depth: int = Field(..., description="Time index of the node")
    x: float
    y: float
    theta: float
    s_set: dict[int, int] = Field(default_factory=dict, description="Neighbor robot -> referenced node id")


class RobotPath(BaseModel):
    """One robot's part of a team plan; every list has horizon + 1 entries."""
    robot: int
    node_ids: list[int] = Field(..., description="Tree node at each time step")
    poses: list[tuple[float, float, float]] = Field(..., description="(x, y, theta) at each time step")
    controls: list[Optional[int]] = Field(
        ..., description="Index of the primitive applied to reach each step; None for the start and for holds"
    )
    cost: float = Field(..., description="Sum of full covariance determinants along the path")


class PlanStats(BaseModel):
    """Operation counters; deterministic for a fixed seed."""
    iterations: int = 0
    samples: int = 0
    rejections: int = 0
    expansions: int = 0
    belief_updates: int = 0
    fusion_terms: int = 0
    neighbor_fetches: int = 0
    fusion_terms_per_iteration: float = Field(
        default=0.0, description="Fusion terms per iteration and per planning worker"
    )
    build_messages: int = 0
    extraction_messages: int = 0
    candidates: int = 0
    skipped_candidates: int = 0
    tree_sizes: list[int] = Field(default_factory=list)
    goal_counts: list[int] = Field(default_factory=list)

    @property
    def messages(self) -> int:
        return self.build_messages + self.extraction_messages


class PlanResult(BaseModel):
    """A team plan and how it was found."""
    schema_version: str = RESULT_SCHEMA_VERSION
    planner: PlannerKind
    scenario_hash: str
    seed: int
    n_max: int
    graph_edges: list[tuple[int, int]] = Field(default_factory=list)
    horizon: int = Field(..., description="Terminal horizon F")
    total_cost: float = Field(..., description="Team cost summed over robots and time steps")
    paths: list[RobotPath]
    determinants: list[list[list[float]]] = Field(
        ..., description="det(Sigma_l) indexed [robot][time step][target]"
    )
    stats: PlanStats
    support: list[NodeRecord] = Field(default_factory=list, description="Nodes the paths depend on")


class RunTimings(BaseModel):
    total_seconds: float = 0.0
    iteration_seconds: list[float] = Field(default_factory=list)

    @property
    def mean_iteration_seconds(self) -> float:
        if not self.iteration_seconds:
            return 0.0
        return sum(self.iteration_seconds) / len(self.iteration_seconds)


class RunRecord(BaseModel):
    """One planner run, successful or not."""
    scenario_hash: str
    seed: int
    planner: PlannerKind
    n_max: int
    success: bool
    error_message: Optional[str] = None
    plan: Optional[PlanResult] = None
    stats: PlanStats
    timings: RunTimings = Field(default_factory=RunTimings)
    oracle_cost: Optional[float] = None
    graph: str = "full"
    average_degree: float = 0.0
    max_degree: int = 0
    versions: dict[str, str] = Field(default_factory=dict)

    def meta(self) -> dict:
        """Contents of run_meta.json."""
        data = self.model_dump(mode="json", exclude={"plan"})
        data["mean_iteration_seconds"] = self.timings.mean_iteration_seconds
        data["horizon"] = self.plan.horizon if self.plan else None
        return data
