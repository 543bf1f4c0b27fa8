import numpy as np
import pytest

from semvox.geometry import (Pose, matrix_from_quat, quat_from_matrix, slerp,
                             transform_points)


def random_pose(rng):
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return Pose(matrix_from_quat(q), rng.normal(size=3))


def test_identity_apply():
    p = Pose.identity()
    pts = np.array([[1.0, 2.0, 3.0], [-4.0, 0.0, 5.0]])
    np.testing.assert_array_equal(p.apply(pts), pts)


def test_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Pose(np.eye(3) * 1.001, np.zeros(3))
    with pytest.raises(ValueError):
        # Reflection: orthonormal but det -1.
        Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_group_laws(rng):
    for _ in range(20):
        a, b = random_pose(rng), random_pose(rng)
        ab = a.compose(b)
        pts = rng.normal(size=(5, 3))
        np.testing.assert_allclose(ab.apply(pts), a.apply(b.apply(pts)), atol=1e-9)
        ident = a.compose(a.inverse())
        np.testing.assert_allclose(ident.rotation, np.eye(3), atol=1e-9)
        np.testing.assert_allclose(ident.translation, 0.0, atol=1e-9)


def test_transform_points_identity_and_translation(rng):
    frm = Pose.from_translation((1.0, 2.0, 3.0))
    to = Pose.identity()
    pts = rng.normal(size=(10, 3))
    np.testing.assert_array_equal(transform_points(pts, frm, frm), pts)
    np.testing.assert_allclose(transform_points(pts, frm, to), pts + [1, 2, 3],
                               atol=1e-12)


def test_transform_points_round_trip(rng):
    frm, to = random_pose(rng), random_pose(rng)
    pts = rng.normal(size=(50, 3)) * 10
    back = transform_points(transform_points(pts, frm, to), to, frm)
    np.testing.assert_allclose(back, pts, atol=1e-9)


def test_rigidity(rng):
    """Pairwise distances survive the transform."""
    frm, to = random_pose(rng), random_pose(rng)
    pts = rng.normal(size=(30, 3)) * 20
    moved = transform_points(pts, frm, to)
    d0 = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    d1 = np.linalg.norm(moved[:, None] - moved[None, :], axis=-1)
    np.testing.assert_allclose(d1, d0, atol=1e-9)


def test_quat_matrix_round_trip(rng):
    for _ in range(50):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        m = matrix_from_quat(q)
        q2 = quat_from_matrix(m)
        # q and -q encode the same rotation.
        assert min(np.abs(q2 - q).max(), np.abs(q2 + q).max()) < 1e-12


def test_slerp_midpoint_yaw():
    q0 = quat_from_matrix(Pose.from_yaw(0.0).rotation)
    q1 = quat_from_matrix(Pose.from_yaw(np.pi / 2).rotation)
    mid = matrix_from_quat(slerp(q0, q1, 0.5))
    np.testing.assert_allclose(mid, Pose.from_yaw(np.pi / 4).rotation, atol=1e-12)


def test_slerp_takes_short_arc():
    # 350 deg to 10 deg should pass through 0, not 180.
    q0 = quat_from_matrix(Pose.from_yaw(np.radians(350)).rotation)
    q1 = quat_from_matrix(Pose.from_yaw(np.radians(10)).rotation)
    mid = matrix_from_quat(slerp(q0, q1, 0.5))
    np.testing.assert_allclose(mid, Pose.from_yaw(0.0).rotation, atol=1e-12)


def test_matrix34_layout():
    pose = Pose.from_yaw(np.pi / 2, (1.0, 2.0, 3.0))
    m = pose.matrix34()
    assert m.shape == (3, 4)
    np.testing.assert_allclose(m[:, 3], [1, 2, 3])
