"""Batch experiments: generate scenes, model them, optionally refine joints.

A config is a JSON object; every random draw derives from its ``seed``:

    {
      "seed": 0,
      "n_scenes": 50,
      "n_points": 4096,
      "max_parts": 3,
      "noise": {"class_flip_prob": 0.02, "offset_sigma": 0.01, ...},
      "noise_sweep": [{...}, {...}],        # optional, one report per entry
      "cluster": {"eps": 0.05, "min_pts": 10, "feature_mode": "concat"},
      "refinement": {"axis_perturbation_deg": 15, "origin_offset_m": 0.05,
                     "plan": {"L": 10, "H": 3}}
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterParams, PartSegmentation, segment_parts
from .errors import InsufficientSupportError, ValidationError
from .grasp import propose_candidates
from .kinematics import JointParams, axis_angular_error, axis_origin_error
from .metrics import ModelingReport, dumps_report, evaluate_scene
from .planner import PlanConfig, RunLog, receding_horizon_run
from .scene import (
    LabeledCloud,
    NoiseModel,
    PerPointFields,
    build_object,
    corrupt_fields,
    ground_truth_fields,
    random_cabinet,
    random_perpendicular,
    sample_cloud,
)
from .voting import MIN_SUPPORT, JointEstimate, vote_joint


def model_cloud(cloud: LabeledCloud, fields: PerPointFields,
                cluster: ClusterParams = ClusterParams(),
                min_support: int = MIN_SUPPORT) -> tuple[PartSegmentation, list[JointEstimate]]:
    """Segment parts and vote one joint per cluster (clusters too small are skipped)."""
    seg = segment_parts(cloud, fields, cluster)
    estimates = []
    for c in range(seg.n_clusters):
        rows = seg.members(c)
        pts = cloud.points[fields.index[rows]]
        try:
            estimates.append(vote_joint(pts, fields.subset(rows), min_support, part_id=c))
        except InsufficientSupportError:
            continue
    return seg, estimates


def perturb_joint(joint: JointParams, rng: np.random.Generator, axis_deg: float,
                  origin_offset: float) -> JointParams:
    """Tilt the axis by exactly ``axis_deg`` and shift a revolute origin by ``origin_offset``.

    Both directions are uniform among those perpendicular to the true axis.
    """
    u = joint.axis_dir
    k = random_perpendicular(u[None], rng)[0]
    a = math.radians(axis_deg)
    u2 = u * math.cos(a) + np.cross(k, u) * math.sin(a)
    w = random_perpendicular(u[None], rng)[0]
    q = joint.origin + origin_offset * w if joint.is_revolute else joint.origin
    return JointParams.from_direction(u2, q, joint.joint_type)


def _field_error(name: str, msg: str) -> ValidationError:
    return ValidationError(f"config field {name!r}: {msg}")


def _int(d: dict, name: str, default=None, minimum: int | None = None):
    v = d.get(name, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise _field_error(name, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise _field_error(name, f"must be >= {minimum}")
    return v


@dataclass(frozen=True)
class RefinementSettings:
    axis_perturbation_deg: float = 15.0
    origin_offset_m: float = 0.05
    plan: PlanConfig = field(default_factory=PlanConfig)
    joint_types: tuple[str, ...] = ("revolute", "prismatic")

    @classmethod
    def from_dict(cls, d: dict) -> "RefinementSettings":
        extra = set(d) - set(cls.__dataclass_fields__)
        if extra:
            raise _field_error("refinement", f"unknown key(s) {sorted(extra)}")
        try:
            plan = PlanConfig.from_dict(d.get("plan", {}))
        except (ValidationError, TypeError) as exc:
            raise _field_error("refinement.plan", str(exc)) from None
        types = tuple(d.get("joint_types", cls.joint_types))
        if not set(types) <= {"revolute", "prismatic"}:
            raise _field_error("refinement.joint_types", f"unknown joint type in {list(types)}")
        return cls(float(d.get("axis_perturbation_deg", 15.0)),
                   float(d.get("origin_offset_m", 0.05)), plan, types)

    def to_dict(self) -> dict:
        return {
            "axis_perturbation_deg": self.axis_perturbation_deg,
            "origin_offset_m": self.origin_offset_m,
            "plan": self.plan.to_dict(),
            "joint_types": list(self.joint_types),
        }


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n_scenes: int = 10
    n_points: int = 4096
    max_parts: int = 3
    n_parts: int | None = None
    noise: tuple[NoiseModel, ...] = (NoiseModel(),)
    cluster: ClusterParams = ClusterParams()
    min_support: int = MIN_SUPPORT
    refinement: RefinementSettings | None = None

    _KEYS = ("seed", "n_scenes", "n_points", "max_parts", "n_parts", "noise", "noise_sweep",
             "cluster", "min_support", "refinement")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        extra = set(d) - set(cls._KEYS)
        if extra:
            raise ValidationError(f"unknown config field(s): {sorted(extra)}")
        if "noise" in d and "noise_sweep" in d:
            raise _field_error("noise_sweep", "give either 'noise' or 'noise_sweep', not both")
        raw = d.get("noise_sweep", [d.get("noise", {})])
        if not isinstance(raw, list) or not raw:
            raise _field_error("noise_sweep", "expected a non-empty list of noise objects")
        noise = []
        for k, nd in enumerate(raw):
            try:
                if "rng_seed" in nd:
                    raise ValidationError("per-scene noise seeds derive from 'seed'")
                noise.append(NoiseModel.from_dict(nd))
            except (ValidationError, TypeError, AttributeError) as exc:
                where = "noise" if "noise" in d else f"noise_sweep[{k}]"
                raise _field_error(where, str(exc)) from None
        try:
            cluster = ClusterParams.from_dict(d.get("cluster", {}))
        except (ValueError, TypeError) as exc:
            raise _field_error("cluster", str(exc)) from None
        ref = d.get("refinement")
        return cls(
            seed=_int(d, "seed", 0, 0),
            n_scenes=_int(d, "n_scenes", 10, 1),
            n_points=_int(d, "n_points", 4096, 1),
            max_parts=_int(d, "max_parts", 3, 1),
            n_parts=_int(d, "n_parts", None, 1),
            noise=tuple(noise),
            cluster=cluster,
            min_support=_int(d, "min_support", MIN_SUPPORT, 1),
            refinement=None if ref is None else RefinementSettings.from_dict(ref),
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_scenes": self.n_scenes,
            "n_points": self.n_points,
            "max_parts": self.max_parts,
            "n_parts": self.n_parts,
            "noise_sweep": [{k: v for k, v in n.to_dict().items() if k != "rng_seed"} for n in self.noise],
            "cluster": self.cluster.to_dict(),
            "min_support": self.min_support,
            "refinement": None if self.refinement is None else self.refinement.to_dict(),
        }


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return ExperimentConfig.from_dict(data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _seeds(seed: int, stream: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence([seed, stream]).generate_state(n)]


@dataclass
class RunSummary:
    key: str
    initial_axis_error_deg: float
    final_axis_error_deg: float
    initial_origin_error_m: float | None
    final_origin_error_m: float | None
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BatchResult:
    report: ModelingReport
    runs: dict[str, RunLog]


def _refine_part(spec, cloud: LabeledCloud, pid: int, settings: RefinementSettings,
                 seed: int) -> tuple[RunLog, RunSummary]:
    sim = build_object(spec)
    part = sim.part(pid)
    lo, hi = part.state_range
    sim.set_joint_state(pid, lo)
    truth = part.joint
    rng = np.random.default_rng(seed)
    psi0 = perturb_joint(truth, rng, settings.axis_perturbation_deg, settings.origin_offset_m)
    m = cloud.part_id == pid
    pts = sim.pose_points(pid, cloud.rest_points[m])
    grasp = propose_candidates(pts, JointEstimate(psi0, len(pts), 0.0, 0.0, pid), 1)[0]
    target = min(settings.plan.target_displacement, 0.9 * (hi - lo))
    plan = PlanConfig.from_dict({**settings.plan.to_dict(), "target_displacement": target})
    log = receding_horizon_run(sim, pid, psi0, grasp, plan, seed)
    origin0 = axis_origin_error(psi0, truth) if truth.is_revolute else None
    last = log.iterations[-1]
    summary = RunSummary("", axis_angular_error(psi0.axis_dir, truth.axis_dir), last.axis_error_deg,
                         origin0, last.origin_error_m, len(log.iterations), log.converged)
    return log, summary


def _refinement_section(summaries: list[RunSummary]) -> dict:
    if not summaries:
        return {"n_runs": 0, "runs": []}
    init = [s.initial_axis_error_deg for s in summaries]
    final = [s.final_axis_error_deg for s in summaries]
    origins = [s.final_origin_error_m for s in summaries if s.final_origin_error_m is not None]
    return {
        "n_runs": len(summaries),
        "mean_initial_axis_error_deg": math.fsum(init) / len(init),
        "mean_final_axis_error_deg": math.fsum(final) / len(final),
        "mean_final_origin_error_m": math.fsum(origins) / len(origins) if origins else None,
        "improved_fraction": sum(f < i for f, i in zip(final, init)) / len(final),
        "converged_fraction": sum(s.converged for s in summaries) / len(summaries),
        "runs": [s.to_dict() for s in summaries],
    }


def run_batch(config: ExperimentConfig) -> list[BatchResult]:
    """Run the configured pipeline; one result per noise level."""
    scene_seeds = _seeds(config.seed, 0, config.n_scenes)
    noise_seeds = _seeds(config.seed, 1, config.n_scenes)
    run_seeds = _seeds(config.seed, 2, config.n_scenes)
    scenes = []
    for s in scene_seeds:
        spec = random_cabinet(s, config.n_parts, config.max_parts)
        obj = build_object(spec)
        cloud = sample_cloud(obj, config.n_points, s)
        scenes.append((spec, obj, cloud, ground_truth_fields(cloud, obj)))

    results = []
    for noise in config.noise:
        metrics, summaries, logs = [], [], {}
        for i, (spec, obj, cloud, oracle) in enumerate(scenes):
            fields = corrupt_fields(oracle, noise.with_seed(noise_seeds[i]))
            seg, estimates = model_cloud(cloud, fields, config.cluster, config.min_support)
            gt = {p.part_id: p.joint for p in spec.parts}
            labels = cloud.part_id[fields.index]
            metrics.append(evaluate_scene(estimates, gt, seg, labels, key=f"scene_{i:04d}"))
            if config.refinement is None:
                continue
            wanted = config.refinement.joint_types
            for p in spec.parts:
                if p.joint.joint_type.name.lower() not in wanted:
                    continue
                key = f"scene_{i:04d}_part_{p.part_id}"
                log, summary = _refine_part(spec, cloud, p.part_id, config.refinement,
                                            run_seeds[i] + p.part_id)
                summary.key = key
                logs[key] = log
                summaries.append(summary)
        report = ModelingReport.from_scenes(metrics)
        report.extra["noise"] = {k: v for k, v in noise.to_dict().items() if k != "rng_seed"}
        report.extra["seed"] = config.seed
        if config.refinement is not None:
            report.extra["refinement"] = _refinement_section(summaries)
        results.append(BatchResult(report, logs))
    return results


def run_experiment(config_file, out_dir) -> list[Path]:
    """Run a config file; write ``report[_NN].json`` and ``runs/`` RunLogs into ``out_dir``.

    Returns the report paths (one per noise level).
    """
    config = load_config(config_file)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_batch(config)
    paths = []
    for k, res in enumerate(results):
        suffix = "" if len(results) == 1 else f"_{k:02d}"
        path = out / f"report{suffix}.json"
        data = res.report.to_dict()
        data["config"] = config.to_dict()
        path.write_text(dumps_report(data))
        paths.append(path)
        if res.runs:
            run_dir = out / f"runs{suffix}"
            run_dir.mkdir(exist_ok=True)
            for key, log in sorted(res.runs.items()):
                log.save(run_dir / f"{key}.json")
    return paths
