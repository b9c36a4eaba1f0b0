"""Attitude error dynamics and the proportional feed-forward controllers.

The error matrix is R_e = R_d^T R; its rotation angle mu is the tracking
error. Two control laws: full feed-forward (the reference rate is fully
known) and known-only feed-forward (the reference rate has an unknown
component, compensated by raising the gain via `gain_for_bounded_rate`).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .errors import NearPiSingularity
from .so3 import _arr3, _mat3


@dataclass(frozen=True)
class AttitudeError:
    """Error rotation R_e = R_d^T R with its angle and rotation vector."""

    r_e: np.ndarray
    mu: float
    tau_e: np.ndarray


@dataclass(frozen=True)
class DesiredAttitudeRate:
    """Known body-frame rate of the reference, plus the bound on what is not.

    `known` is a skew matrix (the part the controller may use);
    `unknown_bound` bounds the norm of the unseen remainder.
    """

    known: np.ndarray
    unknown_bound: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "known", _mat3(self.known))
        if not np.isfinite(self.unknown_bound) or self.unknown_bound < 0:
            raise ValueError("unknown_bound must be finite and >= 0")


@dataclass(frozen=True)
class ControllerConfig:
    """Proportional gain and the error/alignment bands it is tuned for.

    mu_star defaults to delta_star when omitted (mu_star <= delta_star
    guarantees the heading band). k_w may be left None only when a gain
    planner will fill it in before use.
    """

    k_w: float = field(default=None)  # type: ignore[assignment]
    delta_star: float = np.pi
    mu_star: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.mu_star is None:
            object.__setattr__(self, "mu_star", self.delta_star)
        if self.k_w is not None and not self.k_w > 0:
            raise ValueError("k_w must be positive")
        if not (0 < self.mu_star <= self.delta_star <= np.pi):
            raise ValueError("need 0 < mu_star <= delta_star <= pi")


def attitude_error(r_d, r) -> AttitudeError:
    """Error signal between desired and actual attitude.

    Raises NearPiSingularity when the relative rotation sits at the
    antipode, which admissible initial conditions exclude.
    """
    r_e = np.ascontiguousarray(_mat3(r_d).T @ _mat3(r))
    tau_e, mu, status = _k.rot_log(r_e)
    if status != _k.OK:
        raise NearPiSingularity()
    return AttitudeError(r_e=r_e, mu=float(mu), tau_e=tau_e)


def error_rate(omega, omega_d, r_e) -> np.ndarray:
    """Body rate of the error matrix: Omega - Ad_{R_e^T}(Omega_d)."""
    omega, omega_d, r_e = _mat3(omega), _mat3(omega_d), _mat3(r_e)
    return omega - _k.adjoint(np.ascontiguousarray(r_e.T), omega_d)


def control_full_ff(r_e, omega_d, k_w: float) -> np.ndarray:
    """Tracking law -k_w log(R_e) + Ad_{R_e^T}(Omega_d), as a skew matrix.

    Substituted into `error_rate` this gives exactly -k_w log(R_e), hence
    mu decays as exp(-k_w t) for any reference with known rate.
    """
    return control_known_ff(r_e, DesiredAttitudeRate(known=_mat3(omega_d)), k_w)


def control_known_ff(r_e, rate: DesiredAttitudeRate, k_w: float) -> np.ndarray:
    """Same law fed only the known component of the reference rate."""
    if not k_w > 0:
        raise ValueError("k_w must be positive")
    r_e = _mat3(r_e)
    tau_e, _, status = _k.rot_log(r_e)
    if status != _k.OK:
        raise NearPiSingularity()
    w = _k.control_rate(r_e, tau_e, _k.vee(rate.known), k_w)
    return _k.hat(w)


def gain_for_bounded_rate(omega_max: float, mu_star: float) -> float:
    """Smallest gain keeping the error within mu_star against a bounded
    unknown reference rate: k_w = sqrt(2) * omega_max / mu_star."""
    if mu_star <= 0:
        raise ValueError("mu_star must be positive")
    if omega_max < 0:
        raise ValueError("omega_max must be >= 0")
    return float(np.sqrt(2.0) * omega_max / mu_star)


def lyapunov_value(err: AttitudeError, variant: str = "tracking") -> float:
    """Diagnostic energy of the error.

    "tracking": V = mu^2 (= 1/2 ||log R_e||_F^2), which decays at rate
    2 k_w under the full feed-forward law. "robust": V = mu^2 / 4, the
    scaling used in the bounded-rate analysis. Never fed back.
    """
    if variant == "tracking":
        return float(err.mu**2)
    if variant == "robust":
        return float(0.25 * err.mu**2)
    raise ValueError(f"unknown variant {variant!r}")


def heading_alignment_delta(x_b, m_d) -> float:
    """Great-circle angle between two unit headings, in [0, pi].

    For x_b the first column of R = R_d R_e with m_d the first column of
    R_d, this never exceeds the attitude error angle mu.
    """
    x_b, m_d = _arr3(x_b), _arr3(m_d)
    for v in (x_b, m_d):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError("heading vectors must have unit norm")
    c = min(1.0, max(-1.0, float(x_b @ m_d)))
    return float(np.arccos(c))
