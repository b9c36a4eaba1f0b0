"""Rotation-group numerics: hat/vee, exp/log, metrics, adjoints.

Rotations are plain 3x3 numpy arrays (orthonormal, det +1); rotation
vectors and angular velocities are shape (3,) arrays. Skew matrices are
the hat form of angular velocity vectors. All functions are pure.

Serialization convention for rotations everywhere in this package:
row-major flattening to 9 values.
"""

import numpy as np

from . import _kernels as _k
from .errors import NearPiSingularity

# tr(R) <= -1 + this means the principal log is undefined
TRACE_GUARD = _k.TRACE_GUARD


def _arr3(v) -> np.ndarray:
    out = np.ascontiguousarray(v, dtype=np.float64)
    if out.shape != (3,):
        raise ValueError(f"expected shape (3,), got {out.shape}")
    return out


def _mat3(m) -> np.ndarray:
    out = np.ascontiguousarray(m, dtype=np.float64)
    if out.shape != (3, 3):
        raise ValueError(f"expected shape (3, 3), got {out.shape}")
    return out


def hat(v) -> np.ndarray:
    """Skew matrix of v, satisfying hat(v) @ u = cross(v, u)."""
    return _k.hat(_arr3(v))


def vee(s, tol: float = 1e-9) -> np.ndarray:
    """Inverse of hat. Rejects inputs whose symmetric part exceeds tol."""
    s = _mat3(s)
    if np.max(np.abs(s + s.T)) > tol:
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return _k.vee(s)


def exp_so3(tau) -> np.ndarray:
    """Exponential map (Rodrigues' formula) from a rotation vector."""
    return _k.rot_exp(_arr3(tau))


def log_so3(r) -> np.ndarray:
    """Principal logarithm as a rotation vector with angle in [0, pi).

    Raises NearPiSingularity when tr(R) <= -1 + 1e-6, where the principal
    log is undefined.
    """
    tau, _, status = _k.rot_log(_mat3(r))
    if status != _k.OK:
        raise NearPiSingularity()
    return tau


def rotation_angle(r) -> float:
    """Rotation angle of R, i.e. its geodesic distance from identity."""
    theta, status = _k.geodesic_angle(np.eye(3), _mat3(r))
    if status != _k.OK:
        raise NearPiSingularity()
    return float(theta)


def dist_geodesic(r1, r2) -> float:
    """Rotation angle between r1 and r2 (the natural SO(3) metric)."""
    theta, status = _k.geodesic_angle(_mat3(r1), _mat3(r2))
    if status != _k.OK:
        raise NearPiSingularity()
    return float(theta)


def dist_log(r1, r2) -> float:
    """Frobenius norm of log(r1^T r2); equals sqrt(2) * dist_geodesic."""
    return float(np.sqrt(2.0) * dist_geodesic(r1, r2))


def dist_frobenius(r1, r2) -> float:
    """||r1 - r2||_F, well-defined for every pair (no log involved)."""
    return float(_k.frobenius_distance(_mat3(r1), _mat3(r2)))


def adjoint_rotate(r, omega) -> np.ndarray:
    """Adjoint action R @ Omega @ R^T (rotation of angular velocity)."""
    return _k.adjoint(_mat3(r), _mat3(omega))


def lie_bracket(omega1, omega2) -> np.ndarray:
    """Matrix commutator; vee(lie_bracket) = cross(vee(w1), vee(w2))."""
    return _k.bracket(_mat3(omega1), _mat3(omega2))


def exp_coord_derivative(tau, omega) -> np.ndarray:
    """Rate of the rotation vector tau under body angular velocity Omega.

    Returns Omega + 1/2 [tau^, Omega] + (1 - a)/theta^2 [tau^, [tau^, Omega]]
    with a = (theta/2) cot(theta/2); equals Omega at tau = 0.
    """
    out, status = _k.exp_coord_rate(_arr3(tau), _mat3(omega))
    if status != _k.OK:
        raise NearPiSingularity("exponential-coordinate rate undefined near pi")
    return out


def project_to_so3(m, tol: float = 1e-3) -> np.ndarray:
    """Nearest rotation (orthogonal polar factor), for drift repair.

    Inputs farther than tol from orthonormality are rejected: that level
    of drift indicates an integrator bug rather than roundoff.
    """
    m = _mat3(m)
    if np.linalg.norm(m.T @ m - np.eye(3)) >= tol:
        raise ValueError("input too far from orthonormal to be drift repair")
    return _k.project_so3(m)


def is_rotation(r, tol: float = 1e-9) -> bool:
    """Check R^T R = I entrywise and det(R) = 1, both within tol."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        return False
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        return False
    return bool(abs(np.linalg.det(r) - 1.0) <= tol)


def rotation_to_flat(r) -> list:
    """Row-major 9-element serialization used by scenario files and logs."""
    return [float(v) for v in _mat3(r).reshape(9)]


def rotation_from_flat(values) -> np.ndarray:
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (9,):
        raise ValueError("rotation serialization must have 9 values (row-major)")
    r = vals.reshape(3, 3)
    if not is_rotation(r, tol=1e-6):
        raise ValueError("deserialized matrix is not a rotation")
    return np.ascontiguousarray(r)
