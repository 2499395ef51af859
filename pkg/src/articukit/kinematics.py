"""Rigid motion of one-DOF revolute and prismatic joints.

Points are plain ``numpy`` arrays of shape ``(3,)`` or ``(N, 3)``; all
functions accept either and return the same shape they were given.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, UnsupportedMetricError

UNIT_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


class Semantic(enum.IntEnum):
    """Per-point part class; also used as the joint type of a movable part."""

    STATIC = 0
    REVOLUTE = 1
    PRISMATIC = 2

    @classmethod
    def parse(cls, value) -> "Semantic":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise InvalidParameterError(f"unknown joint type {value!r}") from None
        return cls(int(value))


def as_vec3(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise InvalidParameterError(f"{name} must have shape (3,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} has non-finite components")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class JointParams:
    """Articulation parameters of one movable part.

    ``axis_dir`` is re-normalized when it is within ``1e-6`` of unit length
    and rejected otherwise. Use :meth:`from_direction` for arbitrary
    nonzero directions.
    """

    axis_dir: np.ndarray
    origin: np.ndarray
    joint_type: Semantic

    def __post_init__(self):
        u = as_vec3(self.axis_dir, "axis_dir")
        n = float(np.linalg.norm(u))
        if abs(n - 1.0) > RENORMALIZE_TOL:
            raise InvalidParameterError(f"axis_dir is not unit length (norm={n:.9g})")
        jt = Semantic.parse(self.joint_type)
        if jt is Semantic.STATIC:
            raise InvalidParameterError("joint_type must be REVOLUTE or PRISMATIC")
        object.__setattr__(self, "axis_dir", _frozen(u / n))
        object.__setattr__(self, "origin", _frozen(as_vec3(self.origin, "origin")))
        object.__setattr__(self, "joint_type", jt)

    @classmethod
    def from_direction(cls, direction, origin, joint_type) -> "JointParams":
        d = as_vec3(direction, "direction")
        n = float(np.linalg.norm(d))
        if n < 1e-12:
            raise InvalidParameterError("zero-length axis direction")
        return cls(d / n, origin, joint_type)

    @property
    def is_revolute(self) -> bool:
        return self.joint_type is Semantic.REVOLUTE

    def replace(self, axis_dir=None, origin=None) -> "JointParams":
        return JointParams(
            self.axis_dir if axis_dir is None else axis_dir,
            self.origin if origin is None else origin,
            self.joint_type,
        )

    def to_dict(self) -> dict:
        return {
            "joint_type": self.joint_type.name.lower(),
            "axis_dir": [float(x) for x in self.axis_dir],
            "origin": [float(x) for x in self.origin],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointParams":
        try:
            return cls.from_direction(d["axis_dir"], d["origin"], d["joint_type"])
        except KeyError as exc:
            raise InvalidParameterError(f"joint params missing field {exc.args[0]!r}") from None

    def __repr__(self) -> str:
        u = ", ".join(f"{x:.6g}" for x in self.axis_dir)
        q = ", ".join(f"{x:.6g}" for x in self.origin)
        return f"JointParams({self.joint_type.name}, u=({u}), q=({q}))"


def _check_unit(u: np.ndarray) -> None:
    if abs(float(np.linalg.norm(u)) - 1.0) > UNIT_TOL:
        raise InvalidParameterError("joint axis is not unit length")


def skew(u) -> np.ndarray:
    x, y, z = u
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_matrix(u, theta: float) -> np.ndarray:
    """Rodrigues rotation matrix for angle ``theta`` about unit axis ``u``."""
    u = np.asarray(u, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    return c * np.eye(3) + (1.0 - c) * np.outer(u, u) + s * skew(u)


def rotate_about_axis(p, joint: JointParams, theta: float) -> np.ndarray:
    """Rotate ``p`` by ``theta`` about the axis line through ``joint.origin``."""
    _check_unit(joint.axis_dir)
    if not math.isfinite(theta):
        raise InvalidParameterError("rotation angle must be finite")
    p = np.asarray(p, dtype=float)
    R = rotation_matrix(joint.axis_dir, theta)
    return (p - joint.origin) @ R.T + joint.origin


def translate_along_axis(p, joint: JointParams, delta: float) -> np.ndarray:
    _check_unit(joint.axis_dir)
    if not math.isfinite(delta):
        raise InvalidParameterError("translation distance must be finite")
    return np.asarray(p, dtype=float) + delta * joint.axis_dir


def displace(p, joint: JointParams, value: float) -> np.ndarray:
    """Apply a joint displacement (radians or meters, per joint type)."""
    if joint.is_revolute:
        return rotate_about_axis(p, joint, value)
    return translate_along_axis(p, joint, value)


def project_point_to_axis(p, joint: JointParams) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(foot, projection_vec)``: the closest axis point and ``foot - p``."""
    _check_unit(joint.axis_dir)
    p = np.asarray(p, dtype=float)
    u, q = joint.axis_dir, joint.origin
    t = (p - q) @ u
    foot = q + np.multiply.outer(t, u)
    return foot, foot - p


def distance_to_axis(p, joint: JointParams) -> np.ndarray:
    foot, v = project_point_to_axis(p, joint)
    return np.linalg.norm(v, axis=-1)


def _unit(v, name: str) -> np.ndarray:
    v = as_vec3(v, name)
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise InvalidParameterError(f"{name} has zero length")
    return v / n


def axis_angular_error(u_est, u_gt) -> float:
    """Angle in degrees between two unoriented axes, in ``[0, 90]``."""
    a = _unit(u_est, "u_est")
    b = _unit(u_gt, "u_gt")
    # atan2 keeps full precision near 0, where arccos(|a.b|) loses ~8 digits
    sin = float(np.linalg.norm(np.cross(a, b)))
    cos = abs(float(a @ b))
    return math.degrees(math.atan2(sin, cos))


def axis_origin_error(est: JointParams, gt: JointParams) -> float:
    """Distance in meters from ``est.origin`` to the ground-truth axis line."""
    if not (est.is_revolute and gt.is_revolute):
        raise UnsupportedMetricError("origin error is undefined for prismatic joints")
    return float(distance_to_axis(est.origin, gt))


def signed_rotation_angle(p_from, p_to, joint: JointParams) -> float:
    """Angle about the joint axis carrying ``p_from`` closest to ``p_to``."""
    u, q = joint.axis_dir, joint.origin
    a = np.asarray(p_from, dtype=float) - q
    b = np.asarray(p_to, dtype=float) - q
    a = a - (a @ u) * u
    b = b - (b @ u) * u
    return math.atan2(float(np.cross(a, b) @ u), float(a @ b))
