"""Acceptance criteria 1-9, each at its stated tolerance and time budget."""
import json
import math
import time

import numpy as np
import pytest

from articukit.clustering import dbscan, match_parts, segmentation_ap
from articukit.experiment import model_cloud, perturb_joint, run_experiment
from articukit.kinematics import (
    JointParams,
    axis_angular_error,
    axis_origin_error,
    distance_to_axis,
    rotate_about_axis,
    translate_along_axis,
)
from articukit.losses import focal_loss, vector_loss
from articukit.planner import PlanConfig, receding_horizon_run
from articukit.refine import hungarian
from articukit.scene import (
    NoiseModel,
    build_object,
    corrupt_fields,
    ground_truth_fields,
    random_cabinet,
    sample_cloud,
)
from oracles import assignment_oracle, dbscan_oracle


def test_criterion_1_kinematics(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10_000):
        j = JointParams.from_direction(rng.normal(size=3), rng.normal(size=3), "revolute")
        p = rng.normal(size=3) * 2
        a, b = rng.uniform(-2 * math.pi, 2 * math.pi, 2)
        pa = rotate_about_axis(p, j, a)
        worst = max(
            worst,
            abs(float(distance_to_axis(pa, j) - distance_to_axis(p, j))),
            float(np.abs(rotate_about_axis(pa, j, b) - rotate_about_axis(p, j, a + b)).max()),
            float(np.abs(rotate_about_axis(p, j, 2 * math.pi) - p).max()),
            float(np.abs(translate_along_axis(translate_along_axis(p, j, a), j, b)
                         - translate_along_axis(p, j, a + b)).max()),
        )
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 5
    criterion(1, ok, f"max deviation {worst:.2e}, {dt:.2f} s")
    assert ok


def test_criterion_2_loss_pins(criterion):
    got = [vector_loss((1, 0, 0), (1, 0, 0)), vector_loss((0, 1, 0), (1, 0, 0)),
           vector_loss((2, 0, 0), (1, 0, 0)),
           focal_loss((0, 1, 0), 1), focal_loss((0.25, 0.5, 0.25), 1, gamma=0.0),
           focal_loss((0.25, 0.5, 0.25), 1, gamma=2.0)]
    want = [-1.0, math.sqrt(2), 0.0, 0.0, math.log(2), 0.25 * math.log(2)]
    worst = max(abs(g - w) for g, w in zip(got, want))
    ok = worst < 1e-9
    criterion(2, ok, f"max deviation {worst:.2e}")
    assert ok


def test_criterion_3_hungarian(criterion):
    rng = np.random.default_rng(3)
    cases = []
    for _ in range(1000):
        H = int(rng.integers(1, 7))
        L = int(rng.integers(H, 7))
        if rng.random() < 0.5:
            C = rng.integers(0, 4, size=(H, L)).astype(float)
        else:
            C = rng.random((H, L))
        cases.append(C)
    t0 = time.perf_counter()
    bad = 0
    for C in cases:
        total, cols = assignment_oracle(C)
        a = hungarian(C)
        bad += a.total_cost != total or tuple(a.cols) != cols
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 10
    criterion(3, ok, f"{1000 - bad}/1000 exact, {dt:.2f} s")
    assert ok


def _same_partition(a, b) -> bool:
    if not np.array_equal(a < 0, b < 0):
        return False
    pairs = {(int(x), int(y)) for x, y in zip(a, b) if x >= 0}
    return len(pairs) == len({x for x, _ in pairs}) == len({y for _, y in pairs})


def test_criterion_4_dbscan(criterion):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(200):
        n = int(rng.integers(1, 201))
        dim = int(rng.choice([2, 3, 6]))
        X = rng.random((n, dim))
        if rng.random() < 0.3:
            X = np.round(X, 1)  # duplicates and exact-eps distances
        eps = float(rng.uniform(0.05, 0.4))
        m = int(rng.integers(1, 8))
        bad += not _same_partition(dbscan(X, eps, m), dbscan_oracle(X, eps, m))
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 30
    criterion(4, ok, f"{200 - bad}/200 partitions equal, {dt:.2f} s")
    assert ok


SCENE_SEEDS = [int(s) for s in np.random.SeedSequence(2024).generate_state(50)]


@pytest.fixture(scope="module")
def scenes():
    out = []
    for s in SCENE_SEEDS:
        spec = random_cabinet(s, max_parts=3)
        obj = build_object(spec)
        cloud = sample_cloud(obj, 4096, s)
        out.append((spec, cloud, ground_truth_fields(cloud, obj)))
    return out


def _model(scenes, noise: NoiseModel | None):
    ap, types, axis, origin = [], [], [], []
    for k, (spec, cloud, oracle) in enumerate(scenes):
        fields = oracle if noise is None else corrupt_fields(oracle, noise.with_seed(SCENE_SEEDS[k]))
        seg, estimates = model_cloud(cloud, fields)
        labels = cloud.part_id[fields.index]
        ap.append(segmentation_ap(seg, labels))
        by_cluster = {e.part_id: e.params for e in estimates}
        gt = {p.part_id: p.joint for p in spec.parts}
        for c, p, iou in match_parts(seg.cluster_id, labels):
            if iou < 0.75 or c not in by_cluster:
                continue
            est, truth = by_cluster[c], gt[p]
            types.append(est.joint_type is truth.joint_type)
            axis.append(axis_angular_error(est.axis_dir, truth.axis_dir))
            if est.is_revolute and truth.is_revolute:
                origin.append(axis_origin_error(est, truth))
    return np.array(ap), np.array(types), np.array(axis), np.array(origin)


def test_criterion_5_noiseless_round_trip(criterion, scenes):
    ap, types, axis, origin = _model(scenes, None)
    ok = (ap.min() == 1.0 and types.all() and axis.max() < 1e-6 and origin.max() < 1e-9)
    criterion(5, ok, f"AP75 {ap.mean():.3f}, type acc {types.mean():.3f}, "
                     f"max axis {axis.max():.1e} deg, max origin {origin.max():.1e} m")
    assert ok


def test_criterion_6_noise_robustness(criterion, scenes):
    noise = NoiseModel(class_flip_prob=0.02, offset_sigma=0.01, projection_sigma=0.01, axis_dir_sigma=0.05)
    t0 = time.perf_counter()
    ap, types, axis, origin = _model(scenes, noise)
    dt = time.perf_counter() - t0
    ok = axis.mean() < 1.0 and origin.mean() < 0.01 and dt < 120
    criterion(6, ok, f"mean axis {axis.mean():.3f} deg, mean origin {origin.mean() * 100:.3f} cm, "
                     f"AP75 {ap.mean():.3f}, {dt:.1f} s")
    assert ok


def _door_scene(seed):
    s = seed
    while True:
        spec = random_cabinet(s, randomize_state=False)
        revs = [p for p in spec.parts if p.joint.is_revolute]
        if revs:
            return spec, revs[0]
        s += 10007


def _refinement_run(seed, noise):
    spec, part = _door_scene(seed)
    sim = build_object(spec)
    psi0 = perturb_joint(part.joint, np.random.default_rng(seed), 15.0, 0.05)
    cloud = sample_cloud(sim, 4096, seed)
    pts = cloud.points[cloud.part_id == part.part_id]
    grasp = pts[np.argmax(distance_to_axis(pts, part.joint))]
    config = PlanConfig(L=10, H=3, target_displacement=min(1.0, part.state_range[1]),
                        max_iterations=10, execution_noise_sigma=noise)
    return receding_horizon_run(sim, part.part_id, psi0, grasp, config, seed)


@pytest.fixture(scope="module")
def refinement_runs():
    t0 = time.perf_counter()
    clean = [_refinement_run(s, 0.0) for s in range(100)]
    noisy = [_refinement_run(s, 0.002) for s in range(100)]
    return clean, noisy, time.perf_counter() - t0


def test_criterion_7_refinement_convergence(criterion, refinement_runs):
    clean, noisy, dt = refinement_runs
    clean_ok = np.mean([len(r.iterations) <= 10
                        and r.iterations[-1].axis_error_deg < 1.0
                        and r.iterations[-1].origin_error_m < 0.005 for r in clean])
    noisy_ok = np.mean([r.iterations[-1].axis_error_deg < 3.0 for r in noisy])
    ok = clean_ok >= 0.95 and noisy_ok >= 0.90 and dt < 180
    criterion(7, ok, f"noiseless {clean_ok:.0%} (need 95%), noisy {noisy_ok:.0%} (need 90%), {dt:.1f} s")
    assert ok


def test_criterion_8_monotone_objective(criterion, refinement_runs):
    clean = refinement_runs[0]
    bad = sum(any(b > a for a, b in zip(r.objectives, r.objectives[1:])) for r in clean)
    ok = bad == 0
    criterion(8, ok, f"{len(clean) - bad}/{len(clean)} noiseless runs non-increasing")
    assert ok


def test_criterion_9_determinism(criterion, tmp_path):
    cfg = tmp_path / "experiment.json"
    cfg.write_text(json.dumps({
        "seed": 9, "n_scenes": 3, "n_points": 2048,
        "noise": {"class_flip_prob": 0.02, "offset_sigma": 0.01, "projection_sigma": 0.01,
                  "axis_dir_sigma": 0.05},
        "refinement": {"plan": {"max_iterations": 3, "execution_noise_sigma": 0.002}},
    }))
    a = run_experiment(cfg, tmp_path / "a")[0].read_bytes()
    b = run_experiment(cfg, tmp_path / "b")[0].read_bytes()
    ok = a == b
    criterion(9, ok, f"{len(a)} bytes, identical={ok}")
    assert ok
