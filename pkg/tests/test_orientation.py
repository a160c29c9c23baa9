import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from gazectl.orientation import (WORLD_Z, DegenerateFixation, ParallelFixedVector,
                                 UnitQuaternion, axis_angle, canonicalize, gaze_frame,
                                 gaze_task_dx, quat_error, quat_from_axis_angle,
                                 quat_from_rotation, quat_multiply, rotation_error,
                                 rotation_from_quat)

unit = st.floats(-1.0, 1.0, allow_nan=False)
quats = st.tuples(unit, unit, unit, unit).filter(lambda v: np.linalg.norm(v) > 1e-3)
points = st.tuples(*[st.floats(-3.0, 3.0, allow_nan=False)] * 3).map(np.array)


def as_unit(v):
    v = np.asarray(v, dtype=float)
    return UnitQuaternion.from_array(v / np.linalg.norm(v))


def scipy_matrix(q):
    w, (x, y, z) = q.w, q.xyz
    return Rotation.from_quat([x, y, z, w]).as_matrix()


@given(quats)
def test_rotation_from_quat_matches_scipy(v):
    q = as_unit(v)
    np.testing.assert_allclose(rotation_from_quat(q), scipy_matrix(q), atol=1e-12)


@given(quats)
def test_shepperd_roundtrip(v):
    q = canonicalize(as_unit(v))
    back = quat_from_rotation(rotation_from_quat(q))
    assert back.w >= 0
    # at w == 0 both signs are the same rotation
    assert np.allclose(back.array, q.array, atol=1e-10) or \
        (abs(q.w) < 1e-10 and np.allclose(back.array, -q.array, atol=1e-10))


@given(quats)
def test_canonical_angle_in_range(v):
    aa = axis_angle(as_unit(v))
    assert 0.0 <= aa.angle <= np.pi + 1e-12
    assert np.linalg.norm(aa.axis) == pytest.approx(1.0)


def test_canonicalize_at_pi_fixes_axis_sign():
    q = canonicalize(UnitQuaternion(0.0, np.array([0.0, -1.0, 0.0])))
    np.testing.assert_array_equal(q.array, [0.0, 0.0, 1.0, 0.0])
    aa = axis_angle(q)
    assert aa.angle == pytest.approx(np.pi)
    np.testing.assert_array_equal(aa.axis, [0.0, 1.0, 0.0])


def test_identity_axis_angle():
    aa = axis_angle(UnitQuaternion.identity())
    assert aa.angle == 0.0
    np.testing.assert_array_equal(gaze_task_dx(UnitQuaternion.identity()), np.zeros(3))


@settings(max_examples=200)
@given(quats, quats)
def test_error_composes_back(vc, vd):
    qc, qd = as_unit(vc), as_unit(vd)
    qe = quat_error(qc, qd)
    got = quat_multiply(qe.array, qc.array)
    assert np.allclose(got, qd.array, atol=1e-10) or np.allclose(got, -qd.array, atol=1e-10)


@given(quats, quats)
def test_error_matches_matrix_error(vc, vd):
    qc, qd = as_unit(vc), as_unit(vd)
    Re = rotation_error(rotation_from_quat(qc), rotation_from_quat(qd))
    np.testing.assert_allclose(rotation_from_quat(quat_error(qc, qd)), Re, atol=1e-10)


@given(st.tuples(unit, unit, unit).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(0.0, np.pi - 1e-6))
def test_axis_angle_roundtrip(axis, angle):
    q = quat_from_axis_angle(axis, angle)
    aa = axis_angle(q)
    expected = angle * np.asarray(axis) / np.linalg.norm(axis)
    np.testing.assert_allclose(aa.vector, expected, atol=1e-9)
    ref = Rotation.from_rotvec(expected).as_matrix()
    np.testing.assert_allclose(rotation_from_quat(q), ref, atol=1e-12)


def test_dx_is_gain_times_rotation_vector():
    q = quat_from_axis_angle([0, 0, 1], 0.3)
    np.testing.assert_allclose(gaze_task_dx(q, 2.0), [0, 0, 0.6], atol=1e-15)


@settings(max_examples=300)
@given(points, points)
def test_gaze_frame_orthonormal_right_handed(p_c, p_d):
    try:
        f = gaze_frame(p_c, p_d)
    except (DegenerateFixation, ParallelFixedVector):
        return
    R = f.rotation
    np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-10)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(f.i_d, (p_d - p_c) / np.linalg.norm(p_d - p_c), atol=1e-12)
    # k_d stays in the plane spanned by i_d and the fixed vector
    assert abs(np.cross(f.i_d, WORLD_Z) @ f.k_d) < 1e-10
    assert f.k_d @ WORLD_Z >= 0


def test_gaze_frame_straight_ahead_is_identity():
    f = gaze_frame(np.zeros(3), np.array([2.0, 0, 0]))
    np.testing.assert_allclose(f.rotation, np.eye(3), atol=1e-15)


def test_gaze_frame_errors():
    with pytest.raises(DegenerateFixation):
        gaze_frame(np.ones(3), np.ones(3) + 1e-9)
    with pytest.raises(ParallelFixedVector):
        gaze_frame(np.zeros(3), np.array([0, 0, 5.0]))
    # any other fixed vector works there
    f = gaze_frame(np.zeros(3), np.array([0, 0, 5.0]), f_o=np.array([0.0, 1, 0]))
    np.testing.assert_allclose(f.k_d, [0, 1, 0])
