"""``articukit`` command-line interface.

Exit codes: 0 success, 1 invalid input, 2 file I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .clustering import ClusterParams, load_segmentation, save_segmentation
from .errors import ArticuError, ValidationError
from .experiment import model_cloud
from .grasp import propose_candidates
from .kinematics import JointParams
from .metrics import dumps_report, evaluate_modeling
from .planner import PlanConfig, plan_trajectory, receding_horizon_run
from .scene import (
    NoiseModel,
    build_object,
    corrupt_fields,
    ground_truth_fields,
    load_cloud,
    load_fields,
    load_scene,
    random_cabinet,
    sample_cloud,
    save_cloud,
    save_scene,
)
from .voting import JointEstimate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
MODEL_FORMAT_VERSION = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with the I/O code
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _write(path, text: str) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _vec3(text: str) -> np.ndarray:
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"expected x,y,z, got {text!r}") from None
    if len(v) != 3:
        raise ValidationError(f"expected x,y,z, got {text!r}")
    return np.array(v)


def cmd_generate(args) -> None:
    spec = _read_json(args.spec) if args.spec else {}
    known = {"n_scenes", "n_points", "max_parts", "n_parts", "randomize_state", "viewpoint"}
    if set(spec) - known:
        raise ValidationError(f"{args.spec}: unknown field(s) {sorted(set(spec) - known)}")
    n_scenes = int(spec.get("n_scenes", 1))
    if n_scenes < 1:
        raise ValidationError("n_scenes must be >= 1")
    seeds = np.random.SeedSequence(args.seed).generate_state(n_scenes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(int(x) for x in seeds):
        obj_spec = random_cabinet(s, spec.get("n_parts"), int(spec.get("max_parts", 3)),
                                  bool(spec.get("randomize_state", True)))
        cloud = sample_cloud(build_object(obj_spec), int(spec.get("n_points", 4096)), s,
                             spec.get("viewpoint"))
        save_scene(obj_spec, out / f"scene_{i:04d}.json")
        save_cloud(cloud, out / f"scene_{i:04d}.cloud")


def _scene_for_cloud(cloud_path: Path) -> Path:
    return cloud_path.with_suffix(".json")


def cmd_model(args) -> None:
    cloud_path = Path(args.cloud)
    cloud = load_cloud(cloud_path)
    scene_path = Path(args.scene) if args.scene else _scene_for_cloud(cloud_path)
    if args.fields == "oracle":
        fields = ground_truth_fields(cloud, build_object(load_scene(scene_path)))
    else:
        fields = load_fields(args.fields)
        if fields.index.size and fields.index.max() >= len(cloud):
            raise ValidationError("fields reference points outside the cloud")
    if args.noise:
        noise = NoiseModel.from_dict(_read_json(args.noise))
        if args.seed is not None:
            noise = noise.with_seed(args.seed)
        fields = corrupt_fields(fields, noise)
    cluster = ClusterParams.from_dict(_read_json(args.cluster)) if args.cluster else ClusterParams()
    seg, estimates = model_cloud(cloud, fields, cluster)
    out = Path(args.out)
    seg_path = out.with_suffix(".seg")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_segmentation(seg, seg_path)
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "cloud": str(cloud_path),
        "scene": scene_path.stem,
        "segmentation": seg_path.name,
        "estimates": [e.to_dict() for e in estimates],
    }
    _write(out, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _load_psi(path) -> JointParams:
    d = _read_json(path)
    if "estimates" in d:  # a 'model' output: use its first (largest) part
        if not d["estimates"]:
            raise ValidationError(f"{path}: no joint estimates")
        d = d["estimates"][0]
    return JointParams.from_dict(d)


def cmd_plan(args) -> None:
    psi = _load_psi(args.psi)
    traj = plan_trajectory(psi, _vec3(args.grasp), args.current, args.target, args.L)
    doc = {"psi": psi.to_dict(), **traj.to_dict()}
    _write(args.out, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def cmd_refine(args) -> None:
    spec = load_scene(args.scene)
    psi0 = _load_psi(args.psi0)
    cfg = _read_json(args.config) if args.config else {}
    part_id = cfg.pop("part_id", args.part)
    grasp = cfg.pop("grasp", None)
    config = PlanConfig.from_dict(cfg)
    sim = build_object(spec)
    if part_id is None:
        matching = [p.part_id for p in spec.parts if p.joint.joint_type is psi0.joint_type]
        if not matching:
            raise ValidationError(f"scene has no {psi0.joint_type.name.lower()} part")
        part_id = matching[0]
    part_id = int(part_id)
    if args.grasp:
        grasp = _vec3(args.grasp)
    if grasp is None:
        cloud = sample_cloud(sim, 4096, args.seed)
        pts = cloud.points[cloud.part_id == part_id]
        if len(pts) == 0:
            raise ValidationError(f"part {part_id} has no sampled points")
        grasp = propose_candidates(pts, JointEstimate(psi0, len(pts), 0.0, 0.0, part_id), 1)[0].point
    log = receding_horizon_run(sim, part_id, psi0, np.asarray(grasp, dtype=float), config, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    log.save(out)


def cmd_eval(args) -> None:
    runs = sorted(Path(args.runs).glob("*.json"))
    gt_dir = Path(args.gt)
    estimates, gts, segs, labels, keys = [], [], [], [], []
    for path in runs:
        doc = _read_json(path)
        if doc.get("format_version") != MODEL_FORMAT_VERSION or "estimates" not in doc:
            continue
        spec = load_scene(gt_dir / f"{doc['scene']}.json")
        cloud = load_cloud(gt_dir / f"{doc['scene']}.cloud")
        seg = load_segmentation(path.parent / doc["segmentation"])
        if seg.index.size and seg.index.max() >= len(cloud):
            raise ValidationError(f"{path}: segmentation does not fit the ground-truth cloud")
        estimates.append([JointEstimate.from_dict(e) for e in doc["estimates"]])
        gts.append({p.part_id: p.joint for p in spec.parts})
        segs.append(seg)
        labels.append(cloud.part_id[seg.index])
        keys.append(doc["scene"])
    if not estimates:
        raise ValidationError(f"no model outputs found in {args.runs}")
    report = evaluate_modeling(estimates, gts, segs, labels, keys)
    _write(args.out, dumps_report(report.to_dict()))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="articukit", description="Articulated-object modeling and refinement toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="generate scenes and point clouds")
    g.add_argument("--spec", help="generation settings JSON (n_scenes, n_points, max_parts, ...)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("model", help="segment parts and estimate joints")
    m.add_argument("--cloud", required=True)
    m.add_argument("--fields", default="oracle", help="fields file, or 'oracle'")
    m.add_argument("--scene", help="scene JSON (default: next to the cloud)")
    m.add_argument("--noise", help="noise model JSON applied to the fields")
    m.add_argument("--cluster", help="clustering parameters JSON")
    m.add_argument("--seed", type=int, help="overrides the noise model's rng_seed")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_model)

    pl = sub.add_parser("plan", help="plan a contact-point trajectory")
    pl.add_argument("--psi", required=True)
    pl.add_argument("--grasp", required=True, help="x,y,z")
    pl.add_argument("--current", type=float, default=0.0)
    pl.add_argument("--target", type=float, required=True)
    pl.add_argument("--L", type=int, default=10)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plan)

    r = sub.add_parser("refine", help="receding-horizon run with joint refinement")
    r.add_argument("--scene", required=True)
    r.add_argument("--psi0", required=True)
    r.add_argument("--config", help="plan config JSON (may also hold part_id and grasp)")
    r.add_argument("--part", type=int)
    r.add_argument("--grasp", help="x,y,z")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_refine)

    e = sub.add_parser("eval", help="report metrics over model outputs")
    e.add_argument("--runs", required=True, help="directory of model output JSON")
    e.add_argument("--gt", required=True, help="directory written by 'generate'")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (ArticuError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
