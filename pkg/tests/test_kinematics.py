import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from articukit.errors import InvalidParameterError, UnsupportedMetricError
from articukit.kinematics import (
    JointParams,
    Semantic,
    axis_angular_error,
    axis_origin_error,
    displace,
    distance_to_axis,
    project_point_to_axis,
    rotate_about_axis,
    rotation_matrix,
    signed_rotation_angle,
    translate_along_axis,
)
from oracles import line_distance_oracle, rotate_oracle

finite = st.floats(-5, 5, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
direction = vec3.filter(lambda v: np.linalg.norm(v) > 1e-3).map(lambda v: v / np.linalg.norm(v))


def revolute(u=(0, 0, 1), q=(0, 0, 0)):
    return JointParams(np.array(u, float), np.array(q, float), Semantic.REVOLUTE)


def test_quarter_turn_about_z():
    out = rotate_about_axis([1, 0, 0], revolute(), math.pi / 2)
    np.testing.assert_allclose(out, [0, 1, 0], atol=1e-15)


def test_rotation_about_offset_axis_keeps_axis_points():
    j = revolute((0, 1, 0), (2, 0, 3))
    np.testing.assert_allclose(rotate_about_axis([2, 7, 3], j, 1.3), [2, 7, 3], atol=1e-12)


def test_prismatic_translation():
    j = JointParams([1, 0, 0], [0, 0, 0], "prismatic")
    np.testing.assert_allclose(translate_along_axis([0, 1, 2], j, 0.25), [0.25, 1, 2])
    np.testing.assert_allclose(displace([0, 1, 2], j, 0.25), [0.25, 1, 2])


def test_frozen_rotations(frozen):
    for r in frozen["rotation"]:
        out = rotate_about_axis(r["p"], revolute(r["u"], r["q"]), r["theta"])
        np.testing.assert_allclose(out, r["expected"], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(p=vec3, u=direction, q=vec3, theta=st.floats(-10, 10))
def test_rotation_matches_scipy(p, u, q, theta):
    np.testing.assert_allclose(rotate_about_axis(p, revolute(u, q), theta),
                               rotate_oracle(p, u, q, theta), atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(p=vec3, u=direction, q=vec3, a=st.floats(-4, 4), b=st.floats(-4, 4))
def test_rotation_invariants(p, u, q, a, b):
    j = revolute(u, q)
    assert distance_to_axis(rotate_about_axis(p, j, a), j) == pytest.approx(distance_to_axis(p, j), abs=1e-9)
    twice = rotate_about_axis(rotate_about_axis(p, j, a), j, b)
    np.testing.assert_allclose(twice, rotate_about_axis(p, j, a + b), atol=1e-9)
    np.testing.assert_allclose(rotate_about_axis(p, j, 2 * math.pi), p, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(p=vec3, u=direction, q=vec3)
def test_projection_foot_is_on_axis(p, u, q):
    j = revolute(u, q)
    foot, v = project_point_to_axis(p, j)
    np.testing.assert_allclose(foot - p, v, atol=1e-12)
    assert np.linalg.norm(np.cross(foot - q, u)) < 1e-9
    assert float(np.linalg.norm(v)) == pytest.approx(line_distance_oracle(p, u, q), abs=1e-9)


def test_rotation_matrix_is_orthonormal(rng):
    for _ in range(20):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        R = rotation_matrix(u, rng.uniform(-7, 7))
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)


def test_axis_renormalized_within_tolerance():
    j = JointParams([0, 0, 1 + 5e-7], [0, 0, 0], 1)
    assert np.linalg.norm(j.axis_dir) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("u", [[0, 0, 2], [0, 0, 0], [1e-3, 0, 0]])
def test_non_unit_axis_rejected(u):
    with pytest.raises(InvalidParameterError):
        JointParams(u, [0, 0, 0], 1)


def test_static_joint_rejected():
    with pytest.raises(InvalidParameterError):
        JointParams([0, 0, 1], [0, 0, 0], Semantic.STATIC)


def test_params_are_read_only():
    j = revolute()
    with pytest.raises(ValueError):
        j.axis_dir[0] = 3.0


def test_dict_round_trip():
    j = JointParams.from_direction([1, 2, 2], [0.5, -1, 0], "prismatic")
    k = JointParams.from_dict(j.to_dict())
    np.testing.assert_array_equal(j.axis_dir, k.axis_dir)
    assert k.joint_type is Semantic.PRISMATIC


def test_axis_error_is_unsigned_and_degrees():
    assert axis_angular_error([0, 0, 1], [0, 0, -1]) == 0.0
    assert axis_angular_error([1, 0, 0], [0, 1, 0]) == pytest.approx(90.0)
    s = math.radians(5)
    assert axis_angular_error([math.sin(s), 0, math.cos(s)], [0, 0, 1]) == pytest.approx(5.0, abs=1e-12)


def test_axis_error_resolves_tiny_angles():
    tiny = 1e-9
    assert axis_angular_error([tiny, 0, 1], [0, 0, 1]) == pytest.approx(math.degrees(tiny), rel=1e-6)


def test_origin_error():
    est = revolute((0, 0, 1), (0.3, 0.4, 5.0))
    assert axis_origin_error(est, revolute()) == pytest.approx(0.5)


def test_origin_error_undefined_for_prismatic():
    p = JointParams([1, 0, 0], [0, 0, 0], "prismatic")
    with pytest.raises(UnsupportedMetricError):
        axis_origin_error(p, revolute())


def test_signed_rotation_angle_inverts_rotation(rng):
    j = revolute((0, 0, 1), (1, 1, 0))
    for theta in rng.uniform(-3, 3, size=10):
        p = rng.normal(size=3)
        assert signed_rotation_angle(p, rotate_about_axis(p, j, theta), j) == pytest.approx(theta, abs=1e-12)
