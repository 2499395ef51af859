"""Semantics- and axis-aware instance segmentation of movable parts."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ValidationError
from .kinematics import Semantic
from .scene import LabeledCloud, PerPointFields


class FeatureMode(enum.Enum):
    OFFSET_ONLY = "offset"
    PROJECTION_ONLY = "projection"
    CONCAT = "concat"


@dataclass(frozen=True)
class ClusterParams:
    eps: float = 0.05
    min_pts: int = 10
    feature_mode: FeatureMode = FeatureMode.CONCAT

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive")
        if int(self.min_pts) < 1:
            raise ValidationError("min_pts must be >= 1")
        object.__setattr__(self, "feature_mode", FeatureMode(self.feature_mode))

    def to_dict(self) -> dict:
        return {"eps": self.eps, "min_pts": self.min_pts, "feature_mode": self.feature_mode.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterParams":
        return cls(float(d.get("eps", 0.05)), int(d.get("min_pts", 10)),
                   FeatureMode(d.get("feature_mode", "concat")))


@dataclass(eq=False)
class PartSegmentation:
    """Cluster id per field row (-1 for static or unclustered points)."""

    cluster_id: np.ndarray
    semantic: np.ndarray
    index: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.cluster_id.max()) + 1 if len(self.cluster_id) and self.cluster_id.max() >= 0 else 0

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_id == cluster)


def dbscan(features, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN cluster ids (-1 = noise).

    Neighborhoods are closed balls that include the point itself. Clusters
    are seeded in ascending index order, so border points reachable from
    several clusters join the one created first.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if int(min_pts) < 1:
        raise ValidationError("min_pts must be >= 1")
    X = np.asarray(features, dtype=float)
    if X.size == 0:
        return np.zeros(0, dtype=np.int64)
    if X.ndim == 1:
        X = X[:, None]
    return kernels.dbscan_labels(np.ascontiguousarray(X), float(eps), int(min_pts))


def _gather_points(cloud, fields: PerPointFields) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, LabeledCloud) else np.asarray(cloud, dtype=float)
    if fields.index.size and fields.index.max() >= len(pts):
        raise ValidationError("fields reference points outside the cloud")
    return pts[fields.index]


def shifted_features(points: np.ndarray, fields: PerPointFields, mode: FeatureMode) -> np.ndarray:
    if mode is FeatureMode.OFFSET_ONLY:
        return points + fields.offset
    if mode is FeatureMode.PROJECTION_ONLY:
        return points + fields.projection
    return np.hstack([points + fields.offset, points + fields.projection])


def segment_parts(cloud, fields: PerPointFields, params: ClusterParams = ClusterParams()) -> PartSegmentation:
    """Cluster predicted-movable points into part instances.

    Each movable class is clustered separately on the shifted features.
    Cluster ids are then renumbered by descending size (ties: smallest
    member row first); clusters left with fewer than ``min_pts`` members
    after border assignment are dropped to noise.
    """
    if not isinstance(params, ClusterParams):
        raise ValidationError("params must be a ClusterParams")
    pts = _gather_points(cloud, fields)
    semantic = fields.predicted_class()
    feats = shifted_features(pts, fields, params.feature_mode)
    cluster_id = np.full(len(fields), -1, dtype=np.int64)

    found = []
    for cls in (Semantic.REVOLUTE, Semantic.PRISMATIC):
        rows = np.flatnonzero(semantic == cls)
        if rows.size == 0:
            continue
        labels = dbscan(feats[rows], params.eps, params.min_pts)
        for lab in range(int(labels.max()) + 1 if labels.size else 0):
            members = rows[labels == lab]
            if len(members) >= params.min_pts:
                found.append(members)
    found.sort(key=lambda m: (-len(m), int(m[0])))
    for new_id, members in enumerate(found):
        cluster_id[members] = new_id
    return PartSegmentation(cluster_id, semantic.astype(np.int64), fields.index.copy())


def match_parts(cluster_id, gt_part_id) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching of clusters to ground-truth parts.

    Candidate pairs are taken in order of descending point-set IoU (ties:
    smaller cluster id, then smaller part id). Returns ``(cluster, part,
    iou)`` for every matched pair with positive IoU.
    """
    cluster_id = np.asarray(cluster_id)
    gt_part_id = np.asarray(gt_part_id)
    clusters = [c for c in np.unique(cluster_id) if c >= 0]
    parts = [p for p in np.unique(gt_part_id) if p != 0]
    pairs = []
    for c in clusters:
        pm = cluster_id == c
        n_pred = int(pm.sum())
        for p in parts:
            gm = gt_part_id == p
            inter = int(np.count_nonzero(pm & gm))
            if inter:
                pairs.append((-inter / (n_pred + int(gm.sum()) - inter), int(c), int(p)))
    pairs.sort()
    used_c, used_p, out = set(), set(), []
    for neg_iou, c, p in pairs:
        if c in used_c or p in used_p:
            continue
        used_c.add(c)
        used_p.add(p)
        out.append((c, p, -neg_iou))
    return out


def segmentation_ap(pred: PartSegmentation, gt_part_id, iou_threshold: float = 0.75) -> float:
    """Per-scene AP surrogate: ``TP / (n_pred + n_gt - TP)``.

    A true positive is a greedily matched pair with IoU at or above the
    threshold. Equals 1 exactly when the partition is perfect at that
    threshold; an empty scene with no predictions scores 1.
    """
    gt = np.asarray(gt_part_id)
    if gt.shape != pred.cluster_id.shape:
        raise ValidationError("prediction and ground-truth labels differ in length")
    if not 0.0 < iou_threshold <= 1.0:
        raise ValidationError("iou_threshold must lie in (0, 1]")
    n_pred = len({int(c) for c in pred.cluster_id if c >= 0})
    n_gt = len({int(p) for p in gt if p != 0})
    if n_pred == 0 and n_gt == 0:
        return 1.0
    tp = sum(1 for _, _, iou in match_parts(pred.cluster_id, gt) if iou >= iou_threshold)
    return tp / (n_pred + n_gt - tp)


SEG_HEADER = "# articukit-seg v1"


def save_segmentation(seg: PartSegmentation, path) -> None:
    lines = [SEG_HEADER]
    lines += [f"{i} {c} {s}" for i, c, s in zip(seg.index, seg.cluster_id, seg.semantic)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_segmentation(path) -> PartSegmentation:
    with open(path) as fh:
        if fh.readline().strip() != SEG_HEADER:
            raise ValidationError(f"{path}: line 1: not an articukit-seg v1 file")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rows.append([int(v) for v in line.split()])
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: malformed record") from None
            if len(rows[-1]) != 3:
                raise ValidationError(f"{path}: line {lineno}: expected 3 columns")
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, 3)
    return PartSegmentation(arr[:, 1].copy(), arr[:, 2].copy(), arr[:, 0].copy())
