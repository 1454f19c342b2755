"""
Information-form Gaussian beliefs and the distributed Kalman filter.

A belief holds one (information matrix, mean) block per target. Blocks are
independent, so the determinant of the full covariance is the product of
the block determinants and is tracked in log space.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from src.errors import InvalidArgumentError, NumericalDomainError
from src.models import Measurement, TargetBank, TargetModel, symmetrize

logger = logging.getLogger(__name__)

WEIGHT_SUM_TOLERANCE = 1e-12


def _log_dets(omega: np.ndarray) -> np.ndarray:
    """log det(Omega_l) for each block via batched Cholesky."""
    try:
        chol = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as e:
        raise NumericalDomainError("Information matrix is not positive definite") from e
    return 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class InfoBelief:
    """
    Per-target Gaussian beliefs in information form.

    Attributes:
        omega: (M, d, d) stack of information matrices, each symmetric PD.
        mean: (M, d) stack of target position estimates.
    """
    omega: np.ndarray
    mean: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        mean = np.array(self.mean, dtype=float)
        if omega.ndim != 3 or omega.shape[1] != omega.shape[2]:
            raise InvalidArgumentError(f"omega must have shape (M, d, d), got {omega.shape}")
        if mean.shape != omega.shape[:2]:
            raise InvalidArgumentError(f"mean shape {mean.shape} does not match omega {omega.shape}")
        omega.setflags(write=False)
        mean.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def from_covariance(cls, mean, cov) -> "InfoBelief":
        """Build from (M, d) means and (M, d, d) covariances."""
        cov = np.asarray(cov, dtype=float)
        _log_dets(cov)
        return cls(omega=symmetrize(np.linalg.inv(cov)), mean=mean)

    @classmethod
    def from_targets(cls, targets: Sequence[TargetModel]) -> "InfoBelief":
        """Prior belief assembled from each target's prior."""
        return cls.from_covariance(
            np.stack([t.prior_mean for t in targets]),
            np.stack([t.prior_cov for t in targets]),
        )

    @property
    def blocks(self) -> int:
        return self.omega.shape[0]

    @property
    def dim(self) -> int:
        return self.omega.shape[1]

    @cached_property
    def log_dets(self) -> np.ndarray:
        """log det(Sigma_l) for every block."""
        return -_log_dets(self.omega)

    @cached_property
    def covariance(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.omega))

    def same_structure(self, other: "InfoBelief") -> bool:
        return self.omega.shape == other.omega.shape


@dataclass(frozen=True)
class DkfWeights:
    """Convex fusion weights for one robot and its neighbors."""
    self_weight: float
    neighbor_weights: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "neighbor_weights", tuple(float(w) for w in self.neighbor_weights))
        weights = (self.self_weight, *self.neighbor_weights)
        if any(w <= 0.0 for w in weights):
            raise InvalidArgumentError(f"DKF weights must be positive: {weights}")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
            raise InvalidArgumentError(f"DKF weights must sum to 1, got {math.fsum(weights)}")

    @classmethod
    def solo(cls) -> "DkfWeights":
        return cls(self_weight=1.0)

    @classmethod
    def uniform_neighbors(cls, self_weight: float, n_neighbors: int) -> "DkfWeights":
        if n_neighbors == 0:
            return cls.solo()
        share = (1.0 - self_weight) / n_neighbors
        # Absorb rounding so the weights sum to one.
        return cls(self_weight=1.0 - share * n_neighbors, neighbor_weights=(share,) * n_neighbors)


@dataclass(frozen=True)
class WeightScheme:
    """
    Per-target weight rule.

    A robot whose block determinant is no larger than every neighbor's keeps
    ``confident_self_weight`` and spreads the rest evenly over its neighbors.
    When any neighbor is strictly more certain and ``interchange`` is on, the
    robot keeps ``deferring_self_weight`` instead.
    """
    confident_self_weight: float = 0.75
    deferring_self_weight: float = 0.25
    interchange: bool = True

    def __post_init__(self):
        for w in (self.confident_self_weight, self.deferring_self_weight):
            if not 0.0 < w < 1.0:
                raise InvalidArgumentError(f"Self weights must lie in (0, 1), got {w}")

    def weights_for(self, own: InfoBelief, neighbors: Sequence[InfoBelief]) -> list[DkfWeights]:
        if not neighbors:
            return [DkfWeights.solo()] * own.blocks
        if not self.interchange:
            return [DkfWeights.uniform_neighbors(self.confident_self_weight, len(neighbors))] * own.blocks

        neighbor_best = np.min(np.stack([b.log_dets for b in neighbors]), axis=0)
        confident = DkfWeights.uniform_neighbors(self.confident_self_weight, len(neighbors))
        deferring = DkfWeights.uniform_neighbors(self.deferring_self_weight, len(neighbors))
        return [
            deferring if neighbor_best[l] < own.log_dets[l] else confident
            for l in range(own.blocks)
        ]


WeightsArg = Union[DkfWeights, Sequence[DkfWeights]]


def _weight_matrix(weights: WeightsArg, blocks: int, n_neighbors: int) -> np.ndarray:
    """(blocks, 1 + n_neighbors) array of fusion weights."""
    per_block = [weights] * blocks if isinstance(weights, DkfWeights) else list(weights)
    if len(per_block) != blocks:
        raise InvalidArgumentError(f"Expected {blocks} weight sets, got {len(per_block)}")
    rows = []
    for w in per_block:
        if len(w.neighbor_weights) != n_neighbors:
            raise InvalidArgumentError(
                f"Weights cover {len(w.neighbor_weights)} neighbors but {n_neighbors} beliefs were given"
            )
        rows.append((w.self_weight, *w.neighbor_weights))
    return np.array(rows)


def dkf_update(
    own: InfoBelief,
    neighbors: Sequence[InfoBelief],
    weights: WeightsArg,
    measurements: Sequence[Optional[Measurement]],
) -> InfoBelief:
    """
    Fuse neighbor beliefs and add local measurement information.

    Per block l:
        Omega' = k_ii Omega_own + sum_j k_ij Omega_j + r^T r / R
        eta'   = k_ii Omega_own mu_own + sum_j k_ij Omega_j mu_j + r^T (innovation + r mu_bar) / R
    where mu_bar is the fused mean before the measurement.

    Args:
        own: The robot's belief.
        neighbors: Neighbor beliefs, in the same order as the weights.
        weights: One weight set for all blocks, or one per block.
        measurements: Per-block measurement or None.

    Returns:
        The updated belief.

    Raises:
        InvalidArgumentError: On block structure or weight count mismatch.
        NumericalDomainError: If a fused information matrix is not PD.
    """
    if any(not own.same_structure(b) for b in neighbors):
        raise InvalidArgumentError("Neighbor beliefs do not share the block structure")
    if len(measurements) != own.blocks:
        raise InvalidArgumentError(f"Expected {own.blocks} measurement slots, got {len(measurements)}")

    kappa = _weight_matrix(weights, own.blocks, len(neighbors))
    omegas = np.stack([own.omega, *(b.omega for b in neighbors)], axis=1)  # (M, K, d, d)
    means = np.stack([own.mean, *(b.mean for b in neighbors)], axis=1)  # (M, K, d)

    omega = np.einsum("mk,mkij->mij", kappa, omegas)
    eta = np.einsum("mk,mkij,mkj->mi", kappa, omegas, means)
    fused_mean = np.linalg.solve(omega, eta[..., None])[..., 0]

    for l, z in enumerate(measurements):
        if z is None:
            continue
        row = np.asarray(z.row, dtype=float)
        omega[l] += np.outer(row, row) / z.variance
        eta[l] += row * (z.innovation + row @ fused_mean[l]) / z.variance

    omega = symmetrize(omega)
    _log_dets(omega)
    mean = np.linalg.solve(omega, eta[..., None])[..., 0]
    return InfoBelief(omega=omega, mean=mean)


def dkf_predict(b: InfoBelief, targets: Union[TargetBank, Sequence[TargetModel]]) -> InfoBelief:
    """
    Kalman prediction of every block, carried out in covariance form.

    Raises:
        InvalidArgumentError: If the target count differs from the block count.
        NumericalDomainError: If an information matrix is singular.
    """
    bank = targets if isinstance(targets, TargetBank) else TargetBank.from_models(list(targets))
    if len(bank) != b.blocks or bank.A.shape[1] != b.dim:
        raise InvalidArgumentError(f"{len(bank)} targets do not match a belief with {b.blocks} blocks")
    _log_dets(b.omega)
    mean, cov = bank.predict(b.mean, b.covariance)
    return InfoBelief.from_covariance(mean, cov)


def block_det(b: InfoBelief, target_index: int) -> float:
    """det(Sigma_l) = 1 / det(Omega_l)."""
    if not 0 <= target_index < b.blocks:
        raise InvalidArgumentError(f"Target index {target_index} out of range [0, {b.blocks})")
    return math.exp(b.log_dets[target_index])


def full_log_det(b: InfoBelief) -> float:
    return float(math.fsum(b.log_dets))


def full_det(b: InfoBelief) -> float:
    """Determinant of the block-diagonal covariance; underflows to 0.0 rather than failing."""
    return math.exp(full_log_det(b))


def satisfies(b: InfoBelief, thresholds: Sequence[float]) -> bool:
    """True iff block_det(b, l) <= thresholds[l] for every target l."""
    return all(math.exp(ld) <= delta for ld, delta in zip(b.log_dets, thresholds))
