"""
Robot, target and sensor models.

- Robots follow unicycle (differential drive) kinematics driven by a finite
  set of motion primitives.
- Targets follow linear-Gaussian dynamics x' = A x + w, w ~ N(d, Q).
- Sensors are omnidirectional, range-only and line-of-sight limited; the
  range measurement is linearized about the predicted target position.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from src.env import Workspace
from src.errors import InvalidArgumentError, InvalidQueryError, NumericalDomainError


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class RobotPose:
    """Planar robot pose; theta is kept in (-pi, pi]."""
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class MotionPrimitive:
    """Constant (linear, angular) velocity command applied for one step."""
    v: float
    omega: float


def primitive_set(speeds: list[float], turn_rates_deg: list[float]) -> tuple[MotionPrimitive, ...]:
    """Cartesian product of speeds (m/s) and turn rates (deg/s), speeds outermost."""
    return tuple(
        MotionPrimitive(v=float(v), omega=math.radians(w))
        for v in speeds
        for w in turn_rates_deg
    )


def step_pose(p: RobotPose, u: MotionPrimitive, dt: float = 1.0) -> RobotPose:
    """
    Advance a pose by one primitive.

    x' = x + v dt cos(theta), y' = y + v dt sin(theta), theta' = theta + omega dt.
    """
    if dt <= 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    return RobotPose(
        x=p.x + u.v * dt * math.cos(p.theta),
        y=p.y + u.v * dt * math.sin(p.theta),
        theta=p.theta + u.omega * dt,
    )


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def _require_pd(m: np.ndarray, name: str) -> None:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as e:
        raise NumericalDomainError(f"{name} is not positive definite") from e


@dataclass(frozen=True, eq=False)
class TargetModel:
    """Linear-Gaussian dynamics and Gaussian prior for one target."""
    A: np.ndarray
    d: np.ndarray
    Q: np.ndarray
    prior_mean: np.ndarray
    prior_cov: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        cov = np.atleast_2d(np.asarray(self.prior_cov, dtype=float))
        mean = np.atleast_1d(np.asarray(self.prior_mean, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        n = mean.shape[0]

        if A.shape != (n, n):
            raise InvalidArgumentError(f"A must be {n}x{n}, got {A.shape}")
        if Q.shape != (n, n) or cov.shape != (n, n) or d.shape != (n,):
            raise InvalidArgumentError("Q, prior_cov and d must match the state dimension")
        if not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() < -1e-12:
            raise NumericalDomainError("Q must be symmetric positive semidefinite")
        if not np.allclose(cov, cov.T):
            raise NumericalDomainError("prior_cov must be symmetric")
        _require_pd(cov, "prior_cov")

        for name, value in (("A", A), ("Q", Q), ("prior_cov", cov), ("prior_mean", mean), ("d", d)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.prior_mean.shape[0]

    @classmethod
    def static(cls, mean, cov, noise: float = 1e-6) -> "TargetModel":
        """Stationary target: A = I, d = 0, Q = noise * I."""
        n = len(mean)
        return cls(A=np.eye(n), d=np.zeros(n), Q=noise * np.eye(n), prior_mean=mean, prior_cov=cov)


def predict_target(m: TargetModel, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Kalman prediction: mean' = A mean + d, cov' = A cov A^T + Q.

    Raises:
        NumericalDomainError: If cov is not symmetric positive definite.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    _require_pd(cov, "covariance")
    mean_next = m.A @ np.atleast_1d(mean) + m.d
    cov_next = symmetrize(m.A @ cov @ m.A.T + m.Q)
    return mean_next, cov_next


@dataclass(frozen=True, eq=False)
class TargetBank:
    """All target models stacked for batched prediction over belief blocks."""
    A: np.ndarray
    d: np.ndarray
    Q: np.ndarray

    @classmethod
    def from_models(cls, targets: list[TargetModel]) -> "TargetBank":
        if not targets:
            raise InvalidArgumentError("At least one target is required")
        dims = {t.dim for t in targets}
        if len(dims) != 1:
            raise InvalidArgumentError(f"All targets must share one state dimension, got {sorted(dims)}")
        return cls(
            A=np.stack([t.A for t in targets]),
            d=np.stack([t.d for t in targets]),
            Q=np.stack([t.Q for t in targets]),
        )

    def __len__(self) -> int:
        return self.A.shape[0]

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched predict_target over (M, d) means and (M, d, d) covariances."""
        mean_next = np.einsum("mij,mj->mi", self.A, mean) + self.d
        cov_next = symmetrize(self.A @ cov @ np.swapaxes(self.A, -1, -2) + self.Q)
        return mean_next, cov_next


@dataclass(frozen=True)
class SensorModel:
    """Omnidirectional range-only sensor with distance-proportional noise."""
    range: float
    noise_coeff: float
    min_distance: float = 1e-3

    def __post_init__(self):
        if self.range <= 0 or self.noise_coeff <= 0 or self.min_distance <= 0:
            raise InvalidArgumentError(f"Sensor parameters must be positive: {self}")


class Measurement(NamedTuple):
    """Linearized scalar measurement of one target block."""
    row: np.ndarray
    variance: float
    innovation: float = 0.0


def observe(
    s: SensorModel,
    w: Workspace,
    p: RobotPose,
    target_mean: np.ndarray,
) -> Optional[Measurement]:
    """
    Linearized range measurement of a target, or None when it is not visible.

    The Jacobian row is the unit vector from the robot toward the target;
    the noise variance is (noise_coeff * l)^2 with l clamped below by
    ``min_distance``.

    Raises:
        InvalidQueryError: If the robot pose is in collision.
    """
    if not w.is_free(p.x, p.y):
        raise InvalidQueryError(f"Robot pose {p} is not free")

    tx, ty = float(target_mean[0]), float(target_mean[1])
    dx, dy = tx - p.x, ty - p.y
    dist = math.hypot(dx, dy)
    l = max(dist, s.min_distance)
    if l > s.range or not w.segment_clear(p.position, (tx, ty)):
        return None

    if dist > 0.0:
        row = np.array([dx / dist, dy / dist])
    else:
        # Coincident with the target: measure along the heading.
        row = np.array([math.cos(p.theta), math.sin(p.theta)])
    return Measurement(row=row, variance=(s.noise_coeff * l) ** 2)
