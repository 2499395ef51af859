"""Table-I style modeling metrics: AP75, joint-type accuracy, axis and origin error.

Per-scene values are computed first; report aggregates are plain means of
the per-scene values (scenes where a quantity is undefined, e.g. origin
error in a scene without revolute matches, are left out of that mean).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .clustering import PartSegmentation, match_parts, segmentation_ap
from .errors import ValidationError
from .kinematics import JointParams, axis_angular_error, axis_origin_error
from .voting import JointEstimate

IOU_THRESHOLD = 0.75
SIG_DIGITS = 9


@dataclass
class SceneMetrics:
    ap75: float
    type_accuracy: float | None
    mean_axis_error_deg: float | None
    mean_origin_error_m: float | None
    n_matched: int
    n_gt: int
    key: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return math.fsum(vals) / len(vals)


@dataclass
class ModelingReport:
    ap75: float
    type_accuracy: float | None
    mean_axis_error_deg: float | None
    mean_origin_error_m: float | None
    n_scenes: int
    scenes: list[SceneMetrics] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_scenes(cls, scenes: Sequence[SceneMetrics]) -> "ModelingReport":
        if not scenes:
            raise ValidationError("cannot report on an empty batch")
        return cls(
            ap75=_mean(s.ap75 for s in scenes),
            type_accuracy=_mean(s.type_accuracy for s in scenes),
            mean_axis_error_deg=_mean(s.mean_axis_error_deg for s in scenes),
            mean_origin_error_m=_mean(s.mean_origin_error_m for s in scenes),
            n_scenes=len(scenes),
            scenes=list(scenes),
        )

    def to_dict(self) -> dict:
        d = {
            "ap75": self.ap75,
            "type_accuracy": self.type_accuracy,
            "mean_axis_error_deg": self.mean_axis_error_deg,
            "mean_origin_error_m": self.mean_origin_error_m,
            "n_scenes": self.n_scenes,
            "scenes": [s.to_dict() for s in self.scenes],
        }
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return dumps_report(self.to_dict())


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValidationError(f"non-finite value {obj!r} in report")
        return float(f"{obj:.{SIG_DIGITS}g}")
    if isinstance(obj, (np.floating,)):
        return _round_floats(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def dumps_report(data: dict) -> str:
    """Sorted-key JSON with floats cut to 9 significant digits."""
    return json.dumps(_round_floats(data), sort_keys=True, indent=1) + "\n"


def _estimate_by_cluster(estimates) -> dict[int, JointEstimate]:
    if isinstance(estimates, Mapping):
        return {int(k): v for k, v in estimates.items()}
    return {int(e.part_id): e for e in estimates}


def evaluate_scene(estimates, gt: Mapping[int, JointParams], segmentation: PartSegmentation,
                   gt_labels, key: str = "", iou_threshold: float = IOU_THRESHOLD) -> SceneMetrics:
    """Metrics of one scene.

    ``estimates`` holds one JointEstimate per cluster (``part_id`` is the
    cluster id) or a ``{cluster: estimate}`` mapping; ``gt`` maps part ids
    to their true joints; ``gt_labels`` gives the true part id of every
    segmentation row. Only clusters matched to a part at the IoU threshold
    contribute to type accuracy and joint errors.
    """
    labels = np.asarray(gt_labels)
    ap = segmentation_ap(segmentation, labels, iou_threshold)
    by_cluster = _estimate_by_cluster(estimates)
    types, axis_errs, origin_errs = [], [], []
    for c, p, iou in match_parts(segmentation.cluster_id, labels):
        if iou < iou_threshold or c not in by_cluster or p not in gt:
            continue
        est = by_cluster[c].params
        truth = gt[p]
        types.append(1.0 if est.joint_type is truth.joint_type else 0.0)
        axis_errs.append(axis_angular_error(est.axis_dir, truth.axis_dir))
        if est.is_revolute and truth.is_revolute:
            origin_errs.append(axis_origin_error(est, truth))
    n_gt = len({int(p) for p in labels if p != 0})
    return SceneMetrics(ap, _mean(types), _mean(axis_errs), _mean(origin_errs), len(types), n_gt, key)


def evaluate_modeling(estimates: Sequence, gt: Sequence[Mapping[int, JointParams]],
                      segmentations: Sequence[PartSegmentation], gt_labels: Sequence,
                      keys: Sequence[str] | None = None) -> ModelingReport:
    """Batch report over aligned per-scene inputs (see :func:`evaluate_scene`)."""
    n = len(estimates)
    if n == 0:
        raise ValidationError("cannot evaluate an empty batch")
    if not (len(gt) == len(segmentations) == len(gt_labels) == n):
        raise ValidationError("estimates, gt, segmentations and labels must align")
    keys = list(keys) if keys is not None else [str(i) for i in range(n)]
    scenes = [
        evaluate_scene(estimates[i], gt[i], segmentations[i], gt_labels[i], keys[i])
        for i in range(n)
    ]
    return ModelingReport.from_scenes(scenes)
