import numpy as np
import pytest

from articukit.errors import ValidationError
from articukit.kinematics import (
    JointParams,
    axis_angular_error,
    axis_origin_error,
    rotate_about_axis,
    rotation_matrix,
)
from articukit.refine import (
    PlanTemplate,
    RefineConfig,
    hungarian,
    refine_parameters,
    replan,
    trajectory_objective,
)
from oracles import assignment_oracle


@pytest.mark.parametrize("cost, pairs, total", [
    ([[1, 2], [2, 1]], ((0, 0), (1, 1)), 2.0),
    ([[5]], ((0, 0),), 5.0),
    ([[5, 1, 9], [4, 7, 2]], ((0, 1), (1, 2)), 3.0),
])
def test_hungarian_examples(cost, pairs, total):
    a = hungarian(cost)
    assert a.pairs == pairs and a.total_cost == total


def test_hungarian_ties_are_lexicographic():
    assert hungarian(np.ones((2, 3))).pairs == ((0, 0), (1, 1))
    assert hungarian([[0, 0, 1], [1, 0, 0]]).pairs == ((0, 0), (1, 1))


def test_hungarian_matches_oracle_on_integers(rng):
    for _ in range(100):
        H = int(rng.integers(1, 5))
        L = int(rng.integers(H, 6))
        C = rng.integers(0, 3, size=(H, L)).astype(float)
        total, cols = assignment_oracle(C)
        a = hungarian(C)
        assert a.total_cost == total
        assert tuple(a.cols) == cols


def test_hungarian_unordered_mode_keeps_cost(rng):
    C = rng.integers(0, 3, size=(4, 6)).astype(float)
    assert hungarian(C, lexicographic=False).total_cost == hungarian(C).total_cost


@pytest.mark.parametrize("cost", [np.ones((3, 2)), [[-1.0]], [[np.nan]], np.ones(3)])
def test_hungarian_rejects(cost):
    with pytest.raises(ValidationError):
        hungarian(cost)


def test_hungarian_empty_rows():
    assert hungarian(np.zeros((0, 4))).pairs == ()


DOOR = JointParams([0, 0, 1], [0, 0, 0], "revolute")
GRASP = np.array([1.0, 0, 0])
STEPS = np.linspace(0.1, 1.0, 10)


def _actual(psi, values, grasp=GRASP):
    return np.array([rotate_about_axis(grasp, psi, v) for v in values])


def test_objective_zero_on_self():
    t = PlanTemplate(GRASP, STEPS)
    obj = trajectory_objective(DOOR, _actual(DOOR, STEPS[:3]), t)
    assert obj.value == pytest.approx(0.0, abs=1e-12)
    assert obj.assignment.pairs == ((0, 0), (1, 1), (2, 2))


def test_objective_shift_equals_norm():
    t = PlanTemplate(GRASP, STEPS)
    shift = np.array([0.01, -0.02, 0.005])
    obj = trajectory_objective(DOOR, replan(DOOR, t) + shift, t)
    assert obj.value == pytest.approx(np.linalg.norm(shift), rel=1e-12)


def test_objective_single_row_is_nearest():
    t = PlanTemplate(GRASP, [0.2, 0.4, 0.6])
    P = replan(DOOR, t)
    a = np.array([[0.3, 0.9, 0.1]])
    assert trajectory_objective(DOOR, a, t).value == pytest.approx(np.linalg.norm(P - a, axis=1).min())


def test_objective_rejects_empty():
    with pytest.raises(ValidationError):
        trajectory_objective(DOOR, np.zeros((0, 3)), PlanTemplate(GRASP, STEPS))
    with pytest.raises(ValidationError):
        replan(DOOR, PlanTemplate(GRASP))


def test_objective_nonnegative(rng):
    t = PlanTemplate(GRASP, STEPS)
    for _ in range(20):
        assert trajectory_objective(DOOR, rng.normal(size=(3, 3)), t).value >= 0


def test_fixed_point():
    t = PlanTemplate(GRASP, STEPS)
    out = refine_parameters(DOOR, _actual(DOOR, STEPS[:5]), t)
    assert out is DOOR


def _tilt(u, deg, seed):
    rng = np.random.default_rng(seed + 1000)
    w = np.cross(u, rng.normal(size=3))
    return rotation_matrix(w / np.linalg.norm(w), np.radians(deg)) @ u


@pytest.mark.parametrize("seed", range(5))
def test_revolute_axis_recovered(seed):
    truth = JointParams.from_direction([0.1, 0.2, 1.0], [0.05, -0.1, 0.3], "revolute")
    values = np.linspace(0.15, 0.75, 5)
    A = _actual(truth, values)
    psi0 = JointParams(_tilt(truth.axis_dir, 10, seed), truth.origin, "revolute")
    out = refine_parameters(psi0, A, PlanTemplate(GRASP))
    assert axis_angular_error(out.axis_dir, truth.axis_dir) < 1.0
    assert abs(np.linalg.norm(out.axis_dir) - 1) < 1e-9
    assert out.joint_type is truth.joint_type


@pytest.mark.parametrize("seed", range(5))
def test_prismatic_direction_is_secant(seed):
    truth = JointParams.from_direction([0.3, 1.0, 0.1], [0, 0, 0], "prismatic")
    A = GRASP + np.outer(np.linspace(0.06, 0.3, 5), truth.axis_dir)
    psi0 = JointParams(_tilt(truth.axis_dir, 15, seed), truth.origin, "prismatic")
    out = refine_parameters(psi0, A, PlanTemplate(GRASP))
    secant = (A[-1] - A[0]) / np.linalg.norm(A[-1] - A[0])
    assert axis_angular_error(out.axis_dir, truth.axis_dir) < 0.5
    np.testing.assert_allclose(out.axis_dir, secant, atol=1e-6)
    np.testing.assert_array_equal(out.origin, psi0.origin)


@pytest.mark.parametrize("seed", range(10))
def test_never_increases_objective(seed):
    rng = np.random.default_rng(seed)
    truth = JointParams.from_direction(rng.normal(size=3), rng.normal(size=3) * 0.2, "revolute")
    g = truth.origin + np.cross(truth.axis_dir, [1.0, 0, 0])
    A = _actual(truth, np.linspace(0.1, 0.5, 4), g) + rng.normal(scale=0.005, size=(4, 3))
    psi0 = JointParams(_tilt(truth.axis_dir, 20, seed), truth.origin + 0.05, "revolute")
    for template in (PlanTemplate(g), PlanTemplate(g, np.linspace(0.1, 1.0, 10))):
        before = trajectory_objective(psi0, A, template).value
        out = refine_parameters(psi0, A, template, RefineConfig(max_outer_iterations=5))
        assert trajectory_objective(out, A, template).value <= before


def test_origin_steps_stay_in_normal_plane(rng):
    from articukit.refine import _Columns, _MatchedCost

    psi = JointParams.from_direction([0.2, -0.5, 1.0], [0.1, 0.2, 0.3], "revolute")
    A = rng.normal(size=(3, 3))
    cols = _Columns(np.tile(GRASP, (3, 1)), np.array([0.1, 0.2, 0.3]))
    cost = _MatchedCost(psi, A, cols, hungarian(np.ones((3, 3))))
    for _ in range(10):
        u, q = cost.params(rng.normal(size=4))
        assert abs(np.linalg.norm(u) - 1) < 1e-12
        assert abs((q - psi.origin) @ psi.axis_dir) < 1e-12
    prismatic = _MatchedCost(JointParams(psi.axis_dir, psi.origin, "prismatic"), A, cols,
                             hungarian(np.ones((3, 3))))
    assert prismatic.dim == 2
    np.testing.assert_array_equal(prismatic.params(np.array([0.3, -0.2]))[1], psi.origin)


def test_following_template_recovers_origin():
    truth = JointParams([0, 0, 1], [0.4, 0.0, 0.0], "revolute")
    g = np.array([0.4, 0.6, 0.5])
    A = _actual(truth, np.linspace(0.1, 0.9, 9), g)
    psi0 = JointParams(_tilt(truth.axis_dir, 15, 0), truth.origin + [0.03, -0.04, 0], "revolute")
    out = refine_parameters(psi0, A, PlanTemplate(g))
    assert axis_angular_error(out.axis_dir, truth.axis_dir) < 0.1
    assert axis_origin_error(out, truth) < 1e-3


def test_template_forms():
    A = _actual(DOOR, STEPS[:2])
    a = trajectory_objective(DOOR, A, {"grasp_point": GRASP, "displacements": STEPS}).value
    b = trajectory_objective(DOOR, A, [(GRASP, STEPS)]).value
    assert a == b
    with pytest.raises(ValidationError):
        trajectory_objective(DOOR, A, [PlanTemplate(GRASP), PlanTemplate(GRASP, STEPS)])


def test_config_validation_and_round_trip():
    with pytest.raises(ValidationError):
        RefineConfig(step_size=0)
    with pytest.raises(ValidationError):
        RefineConfig(max_inner_iterations=0)
    with pytest.raises(ValidationError):
        RefineConfig.from_dict({"bogus": 1})
    c = RefineConfig(step_size=0.1)
    assert RefineConfig.from_dict(c.to_dict()) == c
