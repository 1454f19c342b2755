"""
Scenario files.

A scenario is a JSON document holding every constant of an experiment. It
is validated against the pydantic models below, hashed over a canonical
serialization, and resolved into a PlanningContext for the planners.
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.belief import WeightScheme
from src.bias import BiasParams
from src.commgraph import CommGraph, random_connected
from src.config import get_settings
from src.env import Rect, Workspace
from src.errors import InvalidArgumentError, ScenarioError
from src.models import RobotPose, SensorModel, TargetModel, primitive_set
from src.planners.context import DEFAULT_EXPANSION_CAP, PlanningContext

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1.8e-5

Pair = tuple[float, float]
Matrix = list[list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ObstacleSpec(_Strict):
    min: Pair = Field(..., description="Lower-left corner (m)")
    max: Pair = Field(..., description="Upper-right corner (m)")


class WorkspaceSpec(_Strict):
    width: float = Field(..., gt=0, description="Workspace width (m)")
    height: float = Field(..., gt=0, description="Workspace height (m)")
    resolution: float = Field(default=0.1, gt=0, description="Grid cell size (m)")
    obstacles: list[ObstacleSpec] = Field(default_factory=list)


class RobotSpec(_Strict):
    x: float
    y: float
    theta: float = Field(default=0.0, description="Heading (rad)")


class PrimitiveSpec(_Strict):
    v: list[float] = Field(..., min_length=1, description="Linear speeds (m/s)")
    omega_deg: list[float] = Field(..., min_length=1, description="Turn rates (deg/s)")


class SensorSpec(_Strict):
    range: float = Field(default=1.0, gt=0, description="Sensing radius (m)")
    noise_coeff: float = Field(default=0.25, gt=0, description="Noise std per meter of range")
    min_distance: float = Field(default=1e-3, gt=0, description="Range clamp near the target (m)")


class TargetSpec(_Strict):
    prior_mean: Pair
    prior_cov: Matrix
    A: Optional[Matrix] = Field(default=None, description="State transition; identity when omitted")
    drift: Pair = Field(default=(0.0, 0.0), description="Mean of the process noise per step")
    Q: Optional[Matrix] = Field(default=None, description="Process noise covariance; 1e-6 I when omitted")
    delta: Optional[float] = Field(default=None, gt=0, description="Determinant threshold")

    @field_validator("prior_cov", "A", "Q")
    @classmethod
    def _two_by_two(cls, value: Optional[Matrix]) -> Optional[Matrix]:
        if value is not None and (len(value) != 2 or any(len(row) != 2 for row in value)):
            raise ValueError("must be a 2x2 matrix")
        return value


class GraphSpec(_Strict):
    kind: Literal["full", "none", "random", "edges"] = "full"
    avg_degree: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    max_degree: Optional[int] = Field(default=None, ge=1)
    edges: list[tuple[int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _random_needs_degree(self) -> "GraphSpec":
        if self.kind == "random" and self.avg_degree is None:
            raise ValueError("avg_degree is required for a random graph")
        return self


class DkfSpec(_Strict):
    rule: Literal["interchange", "fixed"] = "interchange"
    confident_self_weight: float = Field(default=0.75, gt=0, lt=1)
    deferring_self_weight: float = Field(default=0.25, gt=0, lt=1)


class BiasSpec(_Strict):
    enabled: bool = False
    p_v: float = Field(default=0.7, gt=0.5, lt=1)
    p_u: float = Field(default=0.7, gt=0.5, lt=1)
    p_s: float = Field(default=0.7, gt=0.5, lt=1)


class QuantizationSpec(_Strict):
    position: Optional[float] = Field(default=None, gt=0, description="Defaults to the grid resolution")
    heading_deg: float = Field(default=1.0, gt=0)


class PlannerSpec(_Strict):
    n_max: int = Field(default=2000, ge=0)
    max_depth: Optional[int] = Field(default=None, ge=0)
    expansion_cap: Optional[int] = Field(
        default=DEFAULT_EXPANSION_CAP, ge=1, description="Group members expanded per iteration; null expands all"
    )


class Scenario(_Strict):
    """A complete experiment description."""
    name: str = ""
    description: str = ""
    workspace: WorkspaceSpec
    robots: list[RobotSpec] = Field(..., min_length=1)
    primitives: PrimitiveSpec
    dt: float = Field(default=1.0, gt=0)
    sensor: SensorSpec = Field(default_factory=SensorSpec)
    targets: list[TargetSpec] = Field(..., min_length=1)
    default_delta: Optional[float] = Field(default=DEFAULT_DELTA, gt=0)
    graph: GraphSpec = Field(default_factory=GraphSpec)
    dkf: DkfSpec = Field(default_factory=DkfSpec)
    bias: BiasSpec = Field(default_factory=BiasSpec)
    quantization: QuantizationSpec = Field(default_factory=QuantizationSpec)
    planner: PlannerSpec = Field(default_factory=PlannerSpec)

    @model_validator(mode="after")
    def _cross_references(self) -> "Scenario":
        ws = self.workspace
        for i, obstacle in enumerate(ws.obstacles):
            if not (0 <= obstacle.min[0] < obstacle.max[0] <= ws.width and 0 <= obstacle.min[1] < obstacle.max[1] <= ws.height):
                raise ValueError(f"workspace.obstacles.{i} must be a proper rectangle inside the workspace")
        for i, target in enumerate(self.targets):
            if target.delta is None and self.default_delta is None:
                raise ValueError(f"targets.{i}.delta is required when default_delta is null")
            if not (0 <= target.prior_mean[0] <= ws.width and 0 <= target.prior_mean[1] <= ws.height):
                raise ValueError(f"targets.{i}.prior_mean lies outside the workspace")
        for i, robot in enumerate(self.robots):
            inside = 0 <= robot.x <= ws.width and 0 <= robot.y <= ws.height
            blocked = any(
                o.min[0] <= robot.x <= o.max[0] and o.min[1] <= robot.y <= o.max[1] for o in ws.obstacles
            )
            if not inside or blocked:
                raise ValueError(f"robots.{i} starts outside the free space")
        for i, j in self.graph.edges:
            if not (0 <= i < len(self.robots) and 0 <= j < len(self.robots)) or i == j:
                raise ValueError(f"graph.edges contains invalid pair ({i}, {j})")
        return self

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def thresholds(self) -> tuple[float, ...]:
        return tuple(t.delta if t.delta is not None else self.default_delta for t in self.targets)


# -- loading --------------------------------------------------------------


def resolve_scenario_path(name: Union[str, Path]) -> Path:
    """A path as given if it exists, else a bundled scenario by name."""
    path = Path(name)
    if path.exists():
        return path
    bundled = get_settings().scenario_dir / (path.name if path.suffix == ".json" else f"{path.name}.json")
    if bundled.exists():
        return bundled
    raise ScenarioError(f"Scenario not found: {name}")


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Parse and validate a scenario file.

    Raises:
        ScenarioError: With line/column diagnostics for malformed JSON and
            field paths for schema violations.
    """
    path = resolve_scenario_path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return parse_scenario(data, source=str(path))


def parse_scenario(data: Any, source: str = "<scenario>") -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        details = []
        for err in e.errors():
            loc = ".".join(str(part) for part in err["loc"])
            details.append(f"{loc}: {err['msg']}" if loc else err["msg"])
        raise ScenarioError(f"Invalid scenario {source}", details) from e


# -- canonical form -------------------------------------------------------


def _canonical(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidArgumentError(f"Non-finite number in scenario: {value}")
        return format(value, ".17g")
    if isinstance(value, (int, str)):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(value.items())
        return "{" + ",".join(f"{json.dumps(str(k))}:{_canonical(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in value) + "]"
    raise InvalidArgumentError(f"Cannot serialize {type(value).__name__}")


def canonical_json(scenario: Scenario) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    return _canonical(scenario.model_dump(mode="python"))


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(canonical_json(scenario).encode("utf-8")).hexdigest()


# -- overrides ------------------------------------------------------------


def parse_graph_option(option: str) -> GraphSpec:
    """
    Parse a ``--graph`` value: ``full``, ``none`` or ``random:<avg_degree>[:<seed>]``.

    Raises:
        InvalidArgumentError: On any other value.
    """
    if option in ("full", "none"):
        return GraphSpec(kind=option)
    parts = option.split(":")
    if parts[0] == "random" and len(parts) in (2, 3):
        try:
            return GraphSpec(
                kind="random",
                avg_degree=float(parts[1]),
                seed=int(parts[2]) if len(parts) == 3 else 0,
            )
        except (ValueError, ValidationError) as e:
            raise InvalidArgumentError(f"Bad graph option {option!r}: {e}") from e
    raise InvalidArgumentError(f"Graph must be full, none or random:<avg_degree>:<seed>, got {option!r}")


def with_graph(scenario: Scenario, graph: GraphSpec) -> Scenario:
    return scenario.model_copy(update={"graph": graph})


def with_population(scenario: Scenario, n_robots: int, n_targets: int, seed: int) -> Scenario:
    """
    Copy of a template scenario with robots and targets placed uniformly at
    random in free space. Targets reuse the template's first target model.
    """
    rng = np.random.default_rng(seed)
    ws = build_workspace(scenario.workspace)

    def free_point() -> tuple[float, float]:
        while True:
            x, y = rng.uniform(0.0, ws.width), rng.uniform(0.0, ws.height)
            if ws.is_free(x, y):
                return float(x), float(y)

    robots = []
    for _ in range(n_robots):
        x, y = free_point()
        robots.append(RobotSpec(x=x, y=y, theta=float(rng.uniform(-math.pi, math.pi))))
    template = scenario.targets[0]
    targets = [template.model_copy(update={"prior_mean": free_point()}) for _ in range(n_targets)]

    graph = scenario.graph
    if graph.kind == "edges":
        graph = GraphSpec(kind="full")
    return scenario.model_copy(
        update={
            "name": f"{scenario.name}-{n_robots}x{n_targets}",
            "robots": robots,
            "targets": targets,
            "graph": graph,
        }
    )


# -- resolution into model objects ---------------------------------------


def build_workspace(spec: WorkspaceSpec) -> Workspace:
    return Workspace(
        width=spec.width,
        height=spec.height,
        resolution=spec.resolution,
        obstacles=tuple(Rect(o.min[0], o.min[1], o.max[0], o.max[1]) for o in spec.obstacles),
    )


def build_graph(spec: GraphSpec, n_robots: int) -> CommGraph:
    if spec.kind == "full":
        return CommGraph.full(n_robots)
    if spec.kind == "none":
        return CommGraph.empty(n_robots)
    if spec.kind == "edges":
        return CommGraph.from_edges(n_robots, spec.edges)
    return random_connected(n_robots, spec.avg_degree, spec.seed, max_degree=spec.max_degree)


def build_target(spec: TargetSpec) -> TargetModel:
    return TargetModel(
        A=np.array(spec.A) if spec.A is not None else np.eye(2),
        d=np.array(spec.drift),
        Q=np.array(spec.Q) if spec.Q is not None else 1e-6 * np.eye(2),
        prior_mean=np.array(spec.prior_mean),
        prior_cov=np.array(spec.prior_cov),
    )


def build_context(scenario: Scenario) -> PlanningContext:
    """Resolve a validated scenario into planner inputs."""
    bias = scenario.bias
    return PlanningContext(
        workspace=build_workspace(scenario.workspace),
        robot_poses=tuple(RobotPose(r.x, r.y, r.theta) for r in scenario.robots),
        primitives=primitive_set(scenario.primitives.v, scenario.primitives.omega_deg),
        sensor=SensorModel(
            range=scenario.sensor.range,
            noise_coeff=scenario.sensor.noise_coeff,
            min_distance=scenario.sensor.min_distance,
        ),
        targets=tuple(build_target(t) for t in scenario.targets),
        thresholds=scenario.thresholds(),
        graph=build_graph(scenario.graph, scenario.n_robots),
        dt=scenario.dt,
        weights=WeightScheme(
            confident_self_weight=scenario.dkf.confident_self_weight,
            deferring_self_weight=scenario.dkf.deferring_self_weight,
            interchange=scenario.dkf.rule == "interchange",
        ),
        bias=BiasParams(p_v=bias.p_v, p_u=bias.p_u, p_s=bias.p_s) if bias.enabled else None,
        position_tolerance=scenario.quantization.position,
        heading_tolerance_deg=scenario.quantization.heading_deg,
        expansion_cap=scenario.planner.expansion_cap,
        max_depth=scenario.planner.max_depth,
    )


def scenario_json_schema() -> dict:
    return Scenario.model_json_schema()
