"""
Shared fixtures for the planner tests.
"""

import math

import numpy as np
import pytest

from src.belief import WeightScheme
from src.bias import BiasParams
from src.commgraph import CommGraph
from src.config import reset_settings
from src.env import Rect, Workspace
from src.models import RobotPose, SensorModel, TargetModel, primitive_set
from src.planners.context import PlanningContext

SPEEDS = [0.0, 0.2, 1.0]
TURN_RATES = [0, 5, -5, 10, -10, 20, -20, 30, -30, 45, -45, 60, -60]


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch, tmp_path):
    """Every test sees default settings and writes into its own directory."""
    for name in ("AIA_THREADS", "AIA_LOG_LEVEL", "AIA_CHECK_INVARIANTS", "AIA_SCENARIO_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("AIA_OUTPUT_DIR", str(tmp_path / "output"))
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def open_room() -> Workspace:
    return Workspace(width=10.0, height=10.0, resolution=0.5)


@pytest.fixture
def walled_room() -> Workspace:
    """10 x 10 room with a wall x in [2, 3] spanning its full height."""
    return Workspace(width=10.0, height=10.0, resolution=0.5, obstacles=(Rect(2.0, 0.0, 3.0, 10.0),))


def make_context(
    robots=((2.5, 2.5, 0.0),),
    targets=((2.9, 2.5),),
    graph=None,
    width=5.0,
    height=5.0,
    obstacles=(),
    delta=1.8e-5,
    prior_var=0.05,
    bias=True,
    speeds=SPEEDS,
    turn_rates=TURN_RATES,
    **overrides,
) -> PlanningContext:
    """Planning context on an open desk with static targets."""
    n = len(robots)
    return PlanningContext(
        workspace=Workspace(width=width, height=height, resolution=0.1, obstacles=tuple(obstacles)),
        robot_poses=tuple(RobotPose(*r) for r in robots),
        primitives=primitive_set(speeds, turn_rates),
        sensor=SensorModel(range=1.0, noise_coeff=0.25),
        targets=tuple(TargetModel.static(np.array(t), prior_var * np.eye(2)) for t in targets),
        thresholds=(delta,) * len(targets),
        graph=graph if graph is not None else CommGraph.full(n),
        weights=overrides.pop("weights", WeightScheme()),
        bias=BiasParams() if bias else None,
        **overrides,
    )


@pytest.fixture
def desk_context() -> PlanningContext:
    return make_context()


@pytest.fixture
def team_context() -> PlanningContext:
    """Three robots on a path graph 0-1-2 watching three targets."""
    return make_context(
        robots=((1.0, 1.0, 0.0), (2.5, 1.0, 0.0), (4.0, 1.0, math.pi)),
        targets=((1.3, 1.2), (2.5, 1.4), (3.7, 1.2)),
        graph=CommGraph.from_edges(3, [(0, 1), (1, 2)]),
        delta=1e-4,
    )


def random_spd(rng: np.random.Generator, d: int = 2, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d))
    return scale * (a @ a.T + 0.5 * np.eye(d))


PAIR_COV = [[0.05, 0.0], [0.0, 0.05]]


def pair_scenario(**updates):
    """Two robots next to two static targets, with a lenient threshold."""
    from src.scenario import parse_scenario

    data = {
        "name": "pair",
        "workspace": {"width": 5.0, "height": 5.0},
        "robots": [{"x": 1.0, "y": 1.0}, {"x": 2.0, "y": 1.0}],
        "primitives": {"v": [0.0, 0.2, 1.0], "omega_deg": [0, 30, -30]},
        "targets": [
            {"prior_mean": [1.3, 1.2], "prior_cov": PAIR_COV},
            {"prior_mean": [1.7, 1.2], "prior_cov": PAIR_COV},
        ],
        "default_delta": 1e-3,
        "bias": {"enabled": True},
        "planner": {"n_max": 60},
    }
    data.update(updates)
    return parse_scenario(data)
