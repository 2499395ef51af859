"""Per-point training objective, evaluated as a quality score.

No gradients and no training loop: these are plain functions used to
score predicted fields against ground truth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kinematics import Semantic
from .scene import PerPointFields

LOG_CLAMP = 1e-12
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    seg: float
    offset: float
    projection: float
    direction: float
    total: float

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("seg", "offset", "projection", "direction", "total")}


def _check_simplex(probs: np.ndarray, tol: float = 1e-6) -> None:
    if probs.shape[-1] != 3 or np.any(probs < -tol) or np.any(np.abs(probs.sum(axis=-1) - 1.0) > tol):
        raise ValidationError("class probabilities must be a valid 3-way simplex")


def focal_loss(class_probs, true_class, gamma: float = 2.0, alpha: float = 1.0) -> float:
    """``-alpha * (1 - p_t)**gamma * log(p_t)`` with ``p_t`` clamped at 1e-12."""
    probs = np.asarray(class_probs, dtype=float)
    _check_simplex(probs)
    if gamma < 0 or alpha <= 0:
        raise ValidationError("focal loss needs gamma >= 0 and alpha > 0")
    p_t = float(probs[int(true_class)])
    return -alpha * (1.0 - p_t) ** gamma * math.log(max(p_t, LOG_CLAMP))


def _focal_rows(probs: np.ndarray, true_class: np.ndarray, gamma: float, alpha: float) -> np.ndarray:
    p_t = probs[np.arange(len(probs)), true_class]
    return -alpha * (1.0 - p_t) ** gamma * np.log(np.maximum(p_t, LOG_CLAMP))


def _vector_rows(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    dist = np.linalg.norm(pred - gt, axis=1)
    npred = np.linalg.norm(pred, axis=1)
    ngt = np.linalg.norm(gt, axis=1)
    ok = (npred >= ZERO_NORM) & (ngt >= ZERO_NORM)
    cos = np.zeros(len(pred))
    cos[ok] = np.einsum("ij,ij->i", pred[ok], gt[ok]) / (npred[ok] * ngt[ok])
    return dist - cos


def vector_loss(pred, gt) -> float:
    """Euclidean distance minus cosine similarity; the cosine is 0 for a zero vector."""
    pred = np.asarray(pred, dtype=float).reshape(1, 3)
    gt = np.asarray(gt, dtype=float).reshape(1, 3)
    return float(_vector_rows(pred, gt)[0])


def _check_unit_rows(d: np.ndarray, tol: float = 1e-6) -> None:
    if np.any(np.abs(np.linalg.norm(d, axis=1) - 1.0) > tol):
        raise ValidationError("direction vectors must be unit length")


def direction_loss(pred_dir, gt_dir) -> float:
    pred = np.asarray(pred_dir, dtype=float).reshape(1, 3)
    gt = np.asarray(gt_dir, dtype=float).reshape(1, 3)
    _check_unit_rows(pred)
    _check_unit_rows(gt)
    return float(1.0 - pred[0] @ gt[0])


def total_loss(fields_pred: PerPointFields, fields_gt: PerPointFields,
               gamma: float = 2.0, alpha: float = 1.0) -> LossBreakdown:
    """Mean per-point loss over all points.

    Static points (by ground-truth class) contribute only to the
    segmentation term; the other three terms are zero for them.
    """
    n = len(fields_pred)
    if n != len(fields_gt):
        raise ValidationError(f"point count mismatch: {n} predicted vs {len(fields_gt)} ground truth")
    if n == 0:
        raise ValidationError("no points to score")
    _check_simplex(fields_pred.class_probs)
    true_class = fields_gt.predicted_class()
    movable = true_class != Semantic.STATIC

    seg = _focal_rows(fields_pred.class_probs, true_class, gamma, alpha)
    off = np.zeros(n)
    proj = np.zeros(n)
    dirn = np.zeros(n)
    if movable.any():
        off[movable] = _vector_rows(fields_pred.offset[movable], fields_gt.offset[movable])
        proj[movable] = _vector_rows(fields_pred.projection[movable], fields_gt.projection[movable])
        pd, gd = fields_pred.axis_dir[movable], fields_gt.axis_dir[movable]
        _check_unit_rows(pd)
        _check_unit_rows(gd)
        dirn[movable] = 1.0 - np.einsum("ij,ij->i", pd, gd)
    per_point = seg + off + proj + dirn
    return LossBreakdown(
        float(seg.mean()), float(off.mean()), float(proj.mean()), float(dirn.mean()),
        float(per_point.mean()),
    )
