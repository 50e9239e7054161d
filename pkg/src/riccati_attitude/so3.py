"""Rotation and quaternion utilities.

Conventions
-----------
- ``R`` maps body-frame coordinates to inertial coordinates (columns are the
  body axes expressed in the inertial frame).
- Body angular velocity ``omega`` satisfies ``R_dot = R @ skew(omega)``.
- Quaternions are ``(q0, q)`` with scalar part first and Rodrigues formula
  ``R = I + 2 [q]x (q0 I + [q]x)``.
- Euler angles are intrinsic Z-Y-X: ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
I3 = np.eye(3)

ORTHO_TOL = 1e-9
GIMBAL_TOL = 1e-9


def skew(u) -> np.ndarray:
    """Return the matrix ``[u]x`` such that ``skew(u) @ w == cross(u, w)``."""
    x, y, z = u
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for single vectors)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def vee(S: np.ndarray) -> np.ndarray:
    """Inverse of :func:`skew` (uses the antisymmetric part of ``S``)."""
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])


def projector(x) -> np.ndarray:
    """Orthogonal projector ``I - x x^T`` onto the plane normal to unit ``x``."""
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    if abs(n - 1.0) > 1e-9:
        raise ValueError(f"projector expects a unit vector, got norm {n!r}")
    return I3 - np.outer(x, x)


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion ``(q0, q)``; normalised on construction."""

    q0: float
    q: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.q, dtype=float).reshape(3)
        n = np.sqrt(self.q0**2 + vec @ vec)
        if not np.isfinite(n) or n == 0.0:
            raise ValueError("quaternion must have finite non-zero norm")
        object.__setattr__(self, "q0", float(self.q0 / n))
        object.__setattr__(self, "q", vec / n)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> UnitQuaternion:
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return cls(np.cos(angle / 2.0), np.sin(angle / 2.0) * axis)

    @classmethod
    def from_lambda(cls, lam) -> UnitQuaternion:
        """Build from the minimal parametrization ``lambda = 2 q`` (``q0 >= 0``)."""
        q = 0.5 * np.asarray(lam, dtype=float)
        nq2 = q @ q
        if nq2 > 1.0:
            raise ValueError("|lambda| must not exceed 2")
        return cls(np.sqrt(1.0 - nq2), q)

    @property
    def lam(self) -> np.ndarray:
        return 2.0 * self.q

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.q0], self.q))


def quat_to_rot(Q: UnitQuaternion) -> np.ndarray:
    Sq = skew(Q.q)
    return I3 + 2.0 * Sq @ (Q.q0 * I3 + Sq)


def rot_to_quat(R: np.ndarray) -> UnitQuaternion:
    """Extract the unit quaternion of ``R`` with the ``q0 >= 0`` branch.

    Uses Shepperd's method (largest diagonal pivot) for numerical robustness
    near 180 degree rotations.
    """
    R = np.asarray(R, dtype=float)
    tr = np.trace(R)
    d = np.array([tr, R[0, 0], R[1, 1], R[2, 2]])
    k = int(np.argmax(d))
    if k == 0:
        s = 2.0 * np.sqrt(1.0 + tr)
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    elif k == 1:
        s = 2.0 * np.sqrt(1.0 + 2.0 * R[0, 0] - tr)
        q = np.array(
            [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
        )
    elif k == 2:
        s = 2.0 * np.sqrt(1.0 + 2.0 * R[1, 1] - tr)
        q = np.array(
            [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
        )
    else:
        s = 2.0 * np.sqrt(1.0 + 2.0 * R[2, 2] - tr)
        q = np.array(
            [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0.0:
        q = -q
    return UnitQuaternion(q[0], q[1:])


def exp_rotation(omega) -> np.ndarray:
    """Rodrigues exponential ``expm(skew(omega))``."""
    omega = np.asarray(omega, dtype=float)
    theta2 = omega @ omega
    S = skew(omega)
    if theta2 < 1e-12:
        # Taylor coefficients accurate to well below machine epsilon here.
        a = 1.0 - theta2 / 6.0 + theta2**2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2**2 / 720.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return I3 + a * S + b * (S @ S)


def log_rotation(R: np.ndarray) -> np.ndarray:
    """Rotation vector of ``R`` (angle in ``[0, pi]``)."""
    Q = rot_to_quat(R)
    nq = np.linalg.norm(Q.q)
    if nq < 1e-15:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(nq, Q.q0)
    return angle * Q.q / nq


def rotation_angle(R: np.ndarray) -> float:
    """Geodesic distance of ``R`` from the identity, in ``[0, pi]``."""
    Q = rot_to_quat(R)
    return float(2.0 * np.arctan2(np.linalg.norm(Q.q), abs(Q.q0)))


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def from_euler_zyx(roll: float, pitch: float, yaw: float) -> np.ndarray:
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


class EulerAngles(NamedTuple):
    roll: float
    pitch: float
    yaw: float
    gimbal_lock: bool = False


def euler_zyx(R: np.ndarray) -> EulerAngles:
    """Z-Y-X Euler angles of ``R``; pitch in ``[-pi/2, pi/2]``.

    At gimbal lock (``|R[2, 0]| > 1 - 1e-9``) roll is set to zero, yaw absorbs
    the remaining rotation and the ``gimbal_lock`` flag is raised.
    """
    R = np.asarray(R, dtype=float)
    s = -R[2, 0]
    if abs(R[2, 0]) > 1.0 - GIMBAL_TOL:
        pitch = np.copysign(np.pi / 2.0, s)
        yaw = np.arctan2(-R[0, 1], R[1, 1])
        return EulerAngles(0.0, float(pitch), float(yaw), True)
    pitch = np.arcsin(np.clip(s, -1.0, 1.0))
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return EulerAngles(float(roll), float(pitch), float(yaw), False)


def orthonormality_residual(R: np.ndarray) -> float:
    return float(np.max(np.abs(R.T @ R - I3)))


def is_rotation(R: np.ndarray, tol: float = ORTHO_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and orthonormality_residual(R) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def orthonormalize(R: np.ndarray, tol: float = ORTHO_TOL) -> np.ndarray:
    """Project ``R`` back onto SO(3) when its residual exceeds ``tol``.

    One Gram-Schmidt pass over the columns; the third column is rebuilt as
    the cross product so the determinant is +1.
    """
    if orthonormality_residual(R) <= tol:
        return R
    c1 = R[:, 0] / np.linalg.norm(R[:, 0])
    c2 = R[:, 1] - (c1 @ R[:, 1]) * c1
    c2 /= np.linalg.norm(c2)
    return np.column_stack((c1, c2, np.cross(c1, c2)))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation (normalised Gaussian quaternion)."""
    q = rng.standard_normal(4)
    return quat_to_rot(UnitQuaternion(q[0], q[1:]))
