import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import euler_angles, random_rotations, rotations, unit_vectors, vec3
from rcae import so3
from rcae.errors import DegenerateError, NotSkewError


def series_exp(v, terms=20):
    """Truncated power series of the matrix exponential."""
    K = so3.cross_matrix(v)
    out = np.eye(3)
    term = np.eye(3)
    for k in range(1, terms):
        term = term @ K / k
        out = out + term
    return out


def test_cross_matrix_values():
    np.testing.assert_array_equal(so3.cross_matrix([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(so3.cross_matrix([1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])


@given(vec3, vec3)
def test_cross_matrix_matches_cross_product(v, w):
    K = so3.cross_matrix(v)
    np.testing.assert_allclose(K @ w, np.cross(v, w), atol=1e-12)
    np.testing.assert_array_equal(K, -K.T)
    np.testing.assert_allclose(so3.cross3(v, w), np.cross(v, w), atol=1e-12)


@given(vec3)
def test_uncross_round_trip(v):
    np.testing.assert_allclose(so3.uncross(so3.cross_matrix(v)), v, atol=1e-15)


def test_uncross_examples():
    np.testing.assert_array_equal(so3.uncross([[0, -3, 2], [3, 0, -1], [-2, 1, 0]]), [1, 2, 3])
    np.testing.assert_array_equal(so3.uncross(np.zeros((3, 3))), np.zeros(3))
    with pytest.raises(NotSkewError):
        so3.uncross(np.eye(3))


def test_cross_matrix_batched():
    v = np.arange(12.0).reshape(4, 3)
    K = so3.cross_matrix(v)
    for i in range(4):
        np.testing.assert_array_equal(K[i], so3.cross_matrix(v[i]))


def test_exp_identity_and_quarter_turn():
    np.testing.assert_array_equal(so3.exp_so3([0, 0, 0]), np.eye(3))
    R = so3.exp_so3([0, 0, math.pi / 2])
    np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(R, series_exp([0, 0, math.pi / 2]), atol=1e-12)


@given(vec3)
def test_exp_matches_power_series(v):
    v = v * (3.0 / max(1.0, np.linalg.norm(v)))  # series converges well up to |v| = 3
    np.testing.assert_allclose(so3.exp_so3(v), series_exp(v, terms=40), atol=1e-12)


@given(vec3)
def test_exp_is_rotation_and_inverse(v):
    R = so3.exp_so3(v)
    assert so3.orthonormality_error(R) < 1e-12
    assert abs(np.linalg.det(R) - 1.0) < 1e-12
    np.testing.assert_allclose(R @ so3.exp_so3(-v), np.eye(3), atol=1e-12)


@pytest.mark.parametrize("scale", [0.0, 1e-12, 1e-8, 9.9e-7, 1.01e-6, 1e-4])
def test_exp_small_angle_branch_continuous(scale):
    v = scale * np.array([0.3, -0.5, 0.8])
    np.testing.assert_allclose(so3.exp_so3(v), series_exp(v, terms=6), atol=1e-15)


def test_exp_batched_matches_single(rng):
    v = rng.normal(size=(50, 3))
    v[0] = 0.0
    v[1] = 1e-9
    R = so3.exp_so3(v)
    for i in range(50):
        np.testing.assert_allclose(R[i], so3.exp_so3(v[i]), atol=1e-14)


def test_axis_angle_identity_is_degenerate():
    aa = so3.axis_angle(np.eye(3))
    assert aa.angle == 0.0 and aa.degenerate
    np.testing.assert_array_equal(aa.axis, [0, 0, 1])


def test_axis_angle_example():
    v = np.array([0.3, -0.1, 0.2])
    aa = so3.axis_angle(so3.exp_so3(v))
    assert aa.angle == pytest.approx(np.linalg.norm(v), abs=1e-12)
    np.testing.assert_allclose(aa.axis, v / np.linalg.norm(v), atol=1e-12)


@pytest.mark.parametrize("axis", [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])
def test_axis_angle_half_turn(axis):
    n = np.asarray(axis, float) / np.linalg.norm(axis)
    aa = so3.axis_angle(so3.exp_so3(math.pi * n))
    assert aa.angle == pytest.approx(math.pi, abs=1e-12)
    assert aa.near_pi
    assert abs(abs(aa.axis @ n) - 1.0) < 1e-12


@given(st.floats(1e-6, math.pi - 1e-3), unit_vectors())
def test_axis_angle_round_trip(angle, n):
    aa = so3.axis_angle(so3.exp_so3(angle * n))
    assert aa.angle == pytest.approx(angle, abs=1e-9)
    np.testing.assert_allclose(aa.axis, n, atol=1e-9)


@given(st.floats(math.pi - 1e-4, math.pi), unit_vectors())
def test_axis_angle_near_pi_reconstructs(angle, n):
    R = so3.exp_so3(angle * n)
    aa = so3.axis_angle(R)
    np.testing.assert_allclose(so3.exp_so3(aa.angle * aa.axis), R, atol=1e-9)
    assert abs(np.linalg.norm(aa.axis) - 1.0) < 1e-12


@given(rotations())
def test_log_exp_round_trip(R):
    np.testing.assert_allclose(so3.exp_so3(so3.log_so3(R)), R, atol=1e-9)


def test_attitude_error_examples():
    R = so3.exp_so3([0.2, 0.1, -0.4])
    assert so3.attitude_error(R, R) == pytest.approx(0.0, abs=1e-14)
    half = so3.exp_so3(math.pi * np.array([0.6, 0.0, 0.8]))
    assert so3.attitude_error(R, R @ half) == pytest.approx(-4.0, abs=1e-12)


@given(st.floats(-math.pi, math.pi))
def test_attitude_error_z_rotation(t):
    z = so3.attitude_error(np.eye(3), so3.exp_so3([0, 0, t]))
    assert z == pytest.approx(2 * math.cos(t) - 2, abs=1e-12)


@given(rotations(), rotations())
def test_attitude_error_symmetric_and_bounded(A, B):
    z = so3.attitude_error(A, B)
    assert z == pytest.approx(so3.attitude_error(B, A), abs=1e-14)
    assert -4 - 1e-9 <= z <= 1e-9


@given(rotations(), vec3)
def test_relative_orientation(O_meas, a):
    np.testing.assert_allclose(so3.relative_orientation(O_meas, O_meas), np.eye(3), atol=1e-14)
    E = so3.exp_so3(a)
    np.testing.assert_allclose(so3.relative_orientation(E @ O_meas, O_meas), E, atol=1e-12)


def test_euler_reference_initial_orientation():
    e = np.radians([30.0, 20.0, 10.0])
    expected = so3.euler_axis_matrix(1, e[2]) @ so3.euler_axis_matrix(2, e[1]) @ so3.euler_axis_matrix(3, e[0])
    np.testing.assert_allclose(so3.euler321_to_matrix(e), expected, atol=1e-15)
    np.testing.assert_array_equal(so3.euler321_to_matrix([0, 0, 0]), np.eye(3))


@pytest.mark.parametrize("axis", [1, 2, 3])
def test_elementary_matrix_is_passive(axis):
    # coordinates of a fixed vector in a frame rotated by +t about axis i: exp(-t e_i)
    t = 0.37
    e = np.zeros(3)
    e[axis - 1] = 1.0
    np.testing.assert_allclose(so3.euler_axis_matrix(axis, t), so3.exp_so3(-t * e), atol=1e-15)


def test_elementary_matrix_bad_axis():
    with pytest.raises(ValueError):
        so3.euler_axis_matrix(4, 0.1)


@given(euler_angles())
def test_euler_round_trip(e):
    O = so3.euler321_to_matrix(e)
    back = so3.matrix_to_euler321(O)
    assert not back.gimbal_lock
    np.testing.assert_allclose(back.as_array(), e, atol=1e-9)


def test_euler_examples():
    assert so3.matrix_to_euler321(np.eye(3))[:3] == (0.0, 0.0, 0.0)
    back = so3.matrix_to_euler321(so3.euler321_to_matrix((0.5, 0.3, -0.2)))
    np.testing.assert_allclose(back.as_array(), [0.5, 0.3, -0.2], atol=1e-12)
    np.testing.assert_allclose(back.degrees(), np.degrees([0.5, 0.3, -0.2]), atol=1e-10)


@pytest.mark.parametrize("pitch", [math.pi / 2, -math.pi / 2])
def test_euler_gimbal_lock(pitch):
    O = so3.euler321_to_matrix((0.4, pitch, 0.1))
    e = so3.matrix_to_euler321(O)
    assert e.gimbal_lock and e.phi == 0.0
    np.testing.assert_allclose(so3.euler321_to_matrix(e), O, atol=1e-7)


def test_euler_array_matches_scalar(rng):
    R = random_rotations(rng, 500)
    batch = so3.matrix_to_euler321_array(R)
    for i in range(500):
        np.testing.assert_allclose(batch[i], so3.matrix_to_euler321(R[i])[:3], atol=1e-14)
    np.testing.assert_allclose(so3.euler321_to_matrix_array(batch), R, atol=1e-12)


def test_euler_ranges_canonical(rng):
    e = so3.matrix_to_euler321_array(random_rotations(rng, 2000))
    assert np.all(e[:, [0, 2]] > -math.pi) and np.all(e[:, [0, 2]] <= math.pi)
    assert np.all(np.abs(e[:, 1]) <= math.pi / 2)


def test_quat_examples():
    np.testing.assert_array_equal(so3.quat_to_matrix([1, 0, 0, 0]), np.eye(3))
    np.testing.assert_array_equal(so3.quat_to_matrix([0, 1, 0, 0]), np.diag([1, -1, -1]))
    np.testing.assert_array_equal(so3.matrix_to_quat(np.eye(3)), [1, 0, 0, 0])


def test_quat_to_matrix_matches_cross_formula():
    q = so3.quat_normalize([0.3, -0.5, 0.6, 0.2])
    E = so3.cross_matrix(q[1:])
    np.testing.assert_allclose(so3.quat_to_matrix(q), np.eye(3) - 2 * q[0] * E + 2 * E @ E, atol=1e-15)


@given(st.floats(0.0, math.pi), unit_vectors())
def test_quat_sign_convention_matches_exp(angle, n):
    q = so3.quat_from_axis_angle(angle, n)
    np.testing.assert_allclose(so3.quat_to_matrix(q), so3.exp_so3(angle * n), atol=1e-12)
    np.testing.assert_allclose(so3.quat_to_matrix(so3.quat_from_rotvec(angle * n)), so3.exp_so3(angle * n), atol=1e-12)


@given(rotations())
def test_quat_round_trip(R):
    q = so3.matrix_to_quat(R)
    assert q[0] >= 0.0
    assert abs(q @ q - 1.0) < 1e-12
    np.testing.assert_allclose(so3.quat_to_matrix(q), R, atol=1e-9)


@pytest.mark.parametrize("axis", [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, -2, 0.5]])
@pytest.mark.parametrize("angle", [math.pi, math.pi - 1e-9, math.pi - 1e-5])
def test_quat_round_trip_near_pi(axis, angle):
    n = np.asarray(axis, float) / np.linalg.norm(axis)
    R = so3.exp_so3(angle * n)
    np.testing.assert_allclose(so3.quat_to_matrix(so3.matrix_to_quat(R)), R, atol=1e-9)


@given(rotations(), rotations())
def test_quat_multiply_composes_matrices(A, B):
    qa, qb = so3.matrix_to_quat(A), so3.matrix_to_quat(B)
    np.testing.assert_allclose(so3.quat_to_matrix(so3.quat_multiply(qa, qb)), A @ B, atol=1e-12)


def test_quat_from_rotvec_small_angle_series():
    v = np.array([1e-8, -2e-8, 3e-9])
    np.testing.assert_allclose(so3.quat_to_matrix(so3.quat_from_rotvec(v)), so3.exp_so3(v), atol=1e-16)


def test_project_examples():
    R = so3.exp_so3([0.1, 0.2, 0.3])
    np.testing.assert_allclose(so3.project_to_so3(R), R, atol=1e-15)
    np.testing.assert_allclose(so3.project_to_so3(2 * np.eye(3)), np.eye(3), atol=1e-15)
    noisy = R + 1e-6 * np.random.default_rng(1).normal(size=(3, 3))
    np.testing.assert_allclose(so3.project_to_so3(noisy), R, atol=1e-5)


def test_project_matches_polar_factor(rng):
    M = rng.normal(size=(3, 3))
    if np.linalg.det(M) < 0:
        M = -M
    # polar factor M (M^T M)^-1/2
    w, V = np.linalg.eigh(M.T @ M)
    polar = M @ V @ np.diag(w**-0.5) @ V.T
    np.testing.assert_allclose(so3.project_to_so3(M), polar, atol=1e-12)


@pytest.mark.parametrize("M", [np.diag([1.0, 1.0, 0.0]), np.diag([1.0, 1.0, -1.0])])
def test_project_degenerate(M):
    with pytest.raises(DegenerateError):
        so3.project_to_so3(M)


def test_as_orientation_policy():
    R = so3.exp_so3([0.3, 0.0, -0.2])
    assert so3.as_orientation(R) is not R  # always copies input
    np.testing.assert_array_equal(so3.as_orientation(R), R)
    drift = R * (1 + 1e-6)
    out = so3.as_orientation(drift)
    assert so3.orthonormality_error(out) < 1e-12
    with pytest.raises(DegenerateError):
        so3.as_orientation(R * 1.1)
    with pytest.raises(DegenerateError):
        so3.as_orientation(np.full((3, 3), np.nan))


def test_polish_removes_small_drift():
    R = so3.exp_so3([1.0, -0.5, 0.3]) * (1 + 1e-12)
    assert so3.orthonormality_error(so3.polish(R)) < 1e-14


@given(st.floats(-100, 100))
def test_wrap_angle(x):
    w = so3.wrap_angle(x)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)
    assert so3.wrap_scalar(x) == pytest.approx(float(w), abs=1e-12)
    assert -math.pi < so3.wrap_scalar(x) <= math.pi


def test_wrap_angle_boundaries():
    assert so3.wrap_angle(math.pi) == math.pi
    assert so3.wrap_angle(-math.pi) == math.pi
    assert so3.wrap_scalar(-math.pi) == math.pi


@pytest.mark.parametrize("scale", [1e-12, 1e-9, 6.9e-9, 5e-8, 2e-7])
def test_log_tiny_rotation(scale):
    v = scale * np.array([-1.0, 1.0, 1.0])
    np.testing.assert_allclose(so3.log_so3(so3.exp_so3(v)), v, rtol=1e-6, atol=1e-22)
