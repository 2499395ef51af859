"""Geometric contact-point candidates for a segmented part.

Stands in for a learned actionability predictor: revolute parts prefer
points with a long lever arm about the estimated axis; every point of a
prismatic part is equally good.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kinematics import distance_to_axis
from .voting import JointEstimate


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    point: np.ndarray
    approach_dir: np.ndarray
    score: float
    index: int = -1

    def to_dict(self) -> dict:
        return {
            "point": [float(x) for x in self.point],
            "approach_dir": [float(x) for x in self.approach_dir],
            "score": float(self.score),
            "index": int(self.index),
        }


def _scores(points: np.ndarray, estimate: JointEstimate) -> np.ndarray:
    if not estimate.params.is_revolute:
        return np.ones(len(points))
    r = distance_to_axis(points, estimate.params)
    r_max = float(r.max())
    if r_max <= 0.0:
        return np.zeros(len(points))
    return r / r_max


def actionability_score(point, estimate: JointEstimate, part_points) -> float:
    """Lever arm of ``point`` about the axis over the largest one on the part."""
    if not estimate.params.is_revolute:
        return 1.0
    r = float(distance_to_axis(np.asarray(point, dtype=float), estimate.params))
    r_max = float(distance_to_axis(np.asarray(part_points, dtype=float), estimate.params).max())
    if r_max <= 0.0:
        return 0.0
    return min(r / r_max, 1.0)


def propose_candidates(part_points, estimate: JointEstimate, k: int,
                       normals=None) -> list[GraspCandidate]:
    """Top-``k`` part points by score (ties: lower index first)."""
    P = np.asarray(part_points, dtype=float).reshape(-1, 3)
    if len(P) == 0:
        raise ValidationError("part has no points")
    if k < 1:
        raise ValidationError("k must be >= 1")
    scores = _scores(P, estimate)
    order = np.lexsort((np.arange(len(P)), -scores))[:k]
    centroid = P.mean(axis=0)
    out = []
    for i in order:
        if normals is not None:
            a = np.asarray(normals[i], dtype=float)
        else:
            a = P[i] - centroid
        n = float(np.linalg.norm(a))
        a = a / n if n > 1e-12 else estimate.params.axis_dir.copy()
        out.append(GraspCandidate(P[i].copy(), a, float(scores[i]), int(i)))
    return out
