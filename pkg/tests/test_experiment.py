import json

import numpy as np
import pytest

from articukit.errors import ValidationError
from articukit.experiment import ExperimentConfig, load_config, perturb_joint, run_batch, run_experiment
from articukit.kinematics import JointParams, axis_angular_error, axis_origin_error


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_perturb_joint_exact_angle():
    j = JointParams([0, 0, 1], [0.1, 0.2, 0.3], "revolute")
    for s in range(5):
        p = perturb_joint(j, np.random.default_rng(s), 15.0, 0.05)
        assert axis_angular_error(p.axis_dir, j.axis_dir) == pytest.approx(15.0, abs=1e-9)
        assert axis_origin_error(p, j) <= 0.05 + 1e-12


def test_same_seed_byte_identical(tmp_path):
    cfg = _write(tmp_path, {"seed": 3, "n_scenes": 2, "n_points": 1024,
                            "noise": {"axis_dir_sigma": 0.05, "projection_sigma": 0.01},
                            "refinement": {"plan": {"max_iterations": 2}}})
    a = run_experiment(cfg, tmp_path / "a")
    b = run_experiment(cfg, tmp_path / "b")
    assert [p.name for p in a] == ["report.json"]
    assert a[0].read_bytes() == b[0].read_bytes()
    runs_a = sorted((tmp_path / "a" / "runs").iterdir())
    assert runs_a
    for p in runs_a:
        assert p.read_bytes() == (tmp_path / "b" / "runs" / p.name).read_bytes()
    report = json.loads(a[0].read_text())
    assert report["config"]["seed"] == 3 and report["n_scenes"] == 2


def test_noise_sweep_trend():
    cfg = ExperimentConfig.from_dict({"seed": 0, "n_scenes": 20, "n_points": 1024, "noise_sweep": [
        {"axis_dir_sigma": s} for s in (0.01, 0.05, 0.1)]})
    errs = [r.report.mean_axis_error_deg for r in run_batch(cfg)]
    assert errs[0] <= errs[1] <= errs[2]


def test_refinement_improves():
    cfg = ExperimentConfig.from_dict({"seed": 1, "n_scenes": 8, "n_points": 1024,
                                      "refinement": {"axis_perturbation_deg": 15}})
    section = run_batch(cfg)[0].report.extra["refinement"]
    assert section["n_runs"] >= 8
    assert section["improved_fraction"] >= 0.95


def test_sweep_writes_numbered_reports(tmp_path):
    cfg = _write(tmp_path, {"n_scenes": 1, "n_points": 512,
                            "noise_sweep": [{}, {"axis_dir_sigma": 0.1}]})
    paths = run_experiment(cfg, tmp_path / "out")
    assert [p.name for p in paths] == ["report_00.json", "report_01.json"]


@pytest.mark.parametrize("cfg, where", [
    ({"n_scenes": 0}, "n_scenes"),
    ({"n_scenes": "two"}, "n_scenes"),
    ({"bogus": 1}, "bogus"),
    ({"noise": {"axis_dir_sigma": -1}}, "noise"),
    ({"noise_sweep": []}, "noise_sweep"),
    ({"noise": {}, "noise_sweep": [{}]}, "noise_sweep"),
    ({"noise": {"rng_seed": 4}}, "noise"),
    ({"cluster": {"eps": 0}}, "cluster"),
    ({"refinement": {"plan": {"H": 20}}}, "refinement.plan"),
    ({"refinement": {"joint_types": ["ball"]}}, "refinement.joint_types"),
])
def test_config_errors_name_the_field(cfg, where):
    with pytest.raises(ValidationError, match=where.replace(".", r"\.")):
        ExperimentConfig.from_dict(cfg)


def test_json_syntax_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n "seed": 1,\n}')
    with pytest.raises(ValidationError, match="line 3"):
        load_config(p)


def test_config_round_trip():
    c = ExperimentConfig.from_dict({"seed": 5, "noise": {"axis_dir_sigma": 0.02},
                                    "refinement": {}})
    assert ExperimentConfig.from_dict(c.to_dict()) == c
