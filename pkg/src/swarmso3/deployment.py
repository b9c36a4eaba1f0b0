"""Swarm-level geometry: ascending-direction estimate, deployment
covariance, and the gain rules that keep the formation non-degenerate.

Positions are (N, 3) arrays; all quantities are computed from a single
snapshot of the swarm (do not interleave per-agent updates with stats).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import DegenerateDeployment, DegenerateDirection


@dataclass(frozen=True)
class DeploymentStats:
    """Centroid, barycentric coordinates, covariance and its extremes.

    radius is max_i ||x_i|| (written D elsewhere); lambda_min is the
    smallest eigenvalue of the covariance P = (1/N) sum x_i x_i^T.
    """

    centroid: np.ndarray
    x: np.ndarray
    covariance: np.ndarray
    lambda_min: float
    radius: float

    @property
    def degenerate(self) -> bool:
        return self.lambda_min <= 0.0


@dataclass(frozen=True)
class GainPlan:
    """Gain lower bounds and their max, plus the displacement budget."""

    k1: float
    k2: float
    k_w: float
    epsilon_max: float


def deployment_stats(positions) -> DeploymentStats:
    p = np.ascontiguousarray(positions, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
        raise ValueError("positions must be a non-empty (N, 3) array")
    if not np.all(np.isfinite(p)):
        raise ValueError("positions must be finite")
    pc, x, cov, lam, d = _k.swarm_stats(p)
    return DeploymentStats(
        centroid=pc, x=x, covariance=cov, lambda_min=float(lam), radius=float(d)
    )


def ascending_direction(sigma_samples, stats: DeploymentStats) -> np.ndarray:
    """Field-weighted barycentric sum (1 / (N D^2)) sum_i sigma_i x_i.

    With one sample per agent taken at centroid + x_i, this points up the
    field whenever the deployment covariance is suitable; constant offsets
    in sigma cancel because sum x_i = 0.
    """
    sigma = np.ascontiguousarray(sigma_samples, dtype=np.float64)
    if sigma.shape != (stats.x.shape[0],):
        raise ValueError("need exactly one field sample per agent")
    if stats.radius <= 0.0:
        raise DegenerateDirection("all agents collocated (D = 0)")
    return _k.ascending_sum(sigma, stats.x, stats.radius)


def heading_field(ell, eps_norm: float = 1e-9) -> np.ndarray:
    """Normalize the ascending-direction estimate onto the unit sphere.

    Raises DegenerateDirection when ||L|| <= eps_norm (e.g. exactly at the
    source). The simulator passes eps_norm = 1e-9 * (1 + max |sigma|) and
    applies a hold-previous policy on the error.
    """
    ell = np.asarray(ell, dtype=np.float64)
    n = float(np.linalg.norm(ell))
    if n <= eps_norm:
        raise DegenerateDirection("ascending-direction estimate vanishes")
    return ell / n


def pairwise_displacement_bound(s: float, k_w: float) -> float:
    """Worst-case pairwise position drift 2 pi s / k_w during alignment."""
    if s <= 0 or k_w <= 0:
        raise ValueError("s and k_w must be positive")
    return float(2.0 * np.pi * s / k_w)


def epsilon_max(stats0: DeploymentStats) -> float:
    """Largest per-agent displacement that provably preserves full rank.

    Positive root of 2 D0 e + e^2 = lambda_min(P(0)).
    """
    if stats0.lambda_min <= 0.0:
        raise DegenerateDeployment(
            "initial deployment is degenerate (lambda_min <= 0); the "
            "non-degeneracy gain rule requires a full-rank covariance"
        )
    d0 = stats0.radius
    return float(-d0 + np.sqrt(d0 * d0 + stats0.lambda_min))


def gain_for_nondegeneracy(s: float, stats0: DeploymentStats) -> float:
    """Gain that keeps the deployment full rank: 2 pi s / epsilon_max."""
    if s == 0:
        return 0.0
    if s < 0:
        raise ValueError("s must be >= 0")
    return float(2.0 * np.pi * s / epsilon_max(stats0))


def plan_gains(
    omega_max: float, mu_star: float, s: float, stats0: DeploymentStats
) -> GainPlan:
    """Combine both gain rules; the controller runs at their maximum."""
    from .attitude import gain_for_bounded_rate

    k1 = gain_for_bounded_rate(omega_max, mu_star)
    eps = epsilon_max(stats0)
    k2 = gain_for_nondegeneracy(s, stats0)
    return GainPlan(k1=k1, k2=k2, k_w=max(k1, k2), epsilon_max=eps)


def covariance_perturbation_bound(eps: float, stats0: DeploymentStats) -> float:
    """Spectral-norm bound 2 D0 eps + eps^2 on the covariance change when
    every barycentric coordinate moves by at most eps."""
    if eps < 0:
        raise ValueError("eps must be >= 0")
    return float(2.0 * stats0.radius * eps + eps * eps)
