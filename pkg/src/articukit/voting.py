"""Per-part joint parameters from per-point axis and projection votes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateFitError, InsufficientSupportError, ValidationError
from .kinematics import JointParams, Semantic
from .scene import PerPointFields

MIN_SUPPORT = 10


@dataclass(frozen=True, eq=False)
class JointEstimate:
    params: JointParams
    support: int
    direction_dispersion: float
    origin_rms: float
    part_id: int = -1

    def to_dict(self) -> dict:
        return {
            "part_id": int(self.part_id),
            "joint_type": self.params.joint_type.name.lower(),
            "axis_dir": [float(x) for x in self.params.axis_dir],
            "origin": [float(x) for x in self.params.origin],
            "support": int(self.support),
            "dispersion": float(self.direction_dispersion),
            "origin_rms": float(self.origin_rms),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointEstimate":
        params = JointParams.from_direction(d["axis_dir"], d["origin"], d["joint_type"])
        return cls(params, int(d["support"]), float(d["dispersion"]), float(d["origin_rms"]),
                   int(d.get("part_id", -1)))


class LineFit(NamedTuple):
    direction: np.ndarray
    point: np.ndarray
    rms: float


def vote_axis_direction(dirs) -> np.ndarray:
    """Principal eigenvector of ``sum d d^T``, oriented along the first vote."""
    D = np.asarray(dirs, dtype=float).reshape(-1, 3)
    if len(D) == 0:
        raise ValidationError("cannot vote an axis from zero votes")
    _, vecs = np.linalg.eigh(D.T @ D)
    u = vecs[:, -1]
    u = u / np.linalg.norm(u)
    return -u if u @ D[0] < 0 else u


def fit_axis_line(points) -> LineFit:
    """Total-least-squares line: through the centroid along the first principal axis."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(P) < 2:
        raise DegenerateFitError("a line fit needs at least two points")
    c = P.mean(axis=0)
    X = P - c
    if np.max(np.linalg.norm(X, axis=1)) < 1e-12:
        raise DegenerateFitError("all points coincide")
    _, _, vt = np.linalg.svd(X, full_matrices=False)
    d = vt[0] / np.linalg.norm(vt[0])
    return LineFit(d, c, _line_rms(P, c, d))


def _line_rms(P: np.ndarray, point: np.ndarray, d: np.ndarray) -> float:
    X = P - point
    perp = X - np.outer(X @ d, d)
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", perp, perp))))


def classify_joint_type(semantics) -> Semantic:
    s = np.asarray(semantics)
    n_rev = int(np.count_nonzero(s == Semantic.REVOLUTE))
    n_pri = int(np.count_nonzero(s == Semantic.PRISMATIC))
    if n_rev + n_pri == 0:
        raise ValidationError("no movable votes to classify")
    return Semantic.REVOLUTE if n_rev >= n_pri else Semantic.PRISMATIC


def vote_joint(part_points, fields: PerPointFields, min_support: int = MIN_SUPPORT,
               part_id: int = -1) -> JointEstimate:
    """Estimate one part's joint from its points and their predicted fields.

    ``part_points`` and ``fields`` rows must be aligned. Revolute origins
    are the point of the fitted axis line closest to the part centroid;
    prismatic origins are the part centroid itself.
    """
    P = np.asarray(part_points, dtype=float).reshape(-1, 3)
    if len(P) != len(fields):
        raise ValidationError("part points and fields are not aligned")
    if len(P) < min_support:
        raise InsufficientSupportError(f"part has {len(P)} points, need at least {min_support}")
    joint_type = classify_joint_type(fields.predicted_class())
    u = vote_axis_direction(fields.axis_dir)
    centroid = P.mean(axis=0)
    projected = P + fields.projection

    if joint_type is Semantic.REVOLUTE:
        try:
            point = fit_axis_line(projected).point
        except DegenerateFitError:
            point = projected.mean(axis=0)
        origin = point + ((centroid - point) @ u) * u
    else:
        origin = centroid
    cosines = np.clip(np.abs(fields.axis_dir @ u) / np.linalg.norm(fields.axis_dir, axis=1), 0.0, 1.0)
    dispersion = math.sqrt(float(np.mean(np.arccos(cosines) ** 2)))
    return JointEstimate(
        JointParams(u, origin, joint_type),
        len(P),
        dispersion,
        _line_rms(projected, origin, u),
        part_id,
    )
