import math

import numpy as np
import pytest

from lidar_track.core.exceptions import ContractViolationError
from lidar_track.core.geometry import (
    Frame,
    Plane,
    Point3,
    PointCloud,
    Pose6D,
    RigidTransform,
    plane_distance,
    pose_to_transform,
    quaternion_from_euler,
    transform_cloud,
    wrap_angle,
)


def _cloud(xyz):
    xyz = np.asarray(xyz, dtype=float)
    return PointCloud(xyz, np.zeros(len(xyz)))


def _yaw(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def test_identity_transform_keeps_points():
    cloud = _cloud([[1.0, 2.0, 3.0]])
    out = transform_cloud(cloud, RigidTransform.identity(), Frame.WORLD)
    np.testing.assert_allclose(out.xyz, [[1.0, 2.0, 3.0]])
    assert out.frame_id == Frame.WORLD


def test_translation_moves_origin():
    cloud = _cloud([[0.0, 0.0, 0.0]])
    out = transform_cloud(cloud, RigidTransform(np.eye(3), [1.0, 2.0, 3.0]), Frame.WORLD)
    np.testing.assert_allclose(out.xyz, [[1.0, 2.0, 3.0]])


def test_yaw_quarter_turn_rotates_x_onto_y():
    cloud = _cloud([[1.0, 0.0, 0.0]])
    out = transform_cloud(cloud, RigidTransform(_yaw(math.pi / 2), np.zeros(3)), Frame.WORLD)
    np.testing.assert_allclose(out.xyz, [[0.0, 1.0, 0.0]], atol=1e-12)


def test_compose_with_inverse_restores_points():
    rng = np.random.default_rng(7)
    for _ in range(20):
        tf = RigidTransform(_yaw(rng.uniform(-math.pi, math.pi)), rng.normal(size=3))
        pts = rng.normal(size=(30, 3)) * 10
        back = tf.inverse().compose(tf).apply(pts)
        np.testing.assert_allclose(back, pts, atol=1e-9)


def test_transform_preserves_pairwise_distances():
    rng = np.random.default_rng(1)
    tf = RigidTransform(_yaw(0.7), [4.0, -2.0, 1.0])
    pts = rng.normal(size=(10, 3))
    moved = tf.apply(pts)
    for i in range(len(pts)):
        for j in range(len(pts)):
            assert math.isclose(
                np.linalg.norm(pts[i] - pts[j]),
                np.linalg.norm(moved[i] - moved[j]),
                abs_tol=1e-9,
            )


def test_compose_applies_right_operand_first():
    a = RigidTransform(np.eye(3), [1.0, 0.0, 0.0])
    b = RigidTransform(_yaw(math.pi / 2), np.zeros(3))
    # rotate then translate
    np.testing.assert_allclose(a.compose(b).apply([1.0, 0.0, 0.0]), [1.0, 1.0, 0.0], atol=1e-12)


def test_non_orthonormal_rotation_rejected():
    with pytest.raises(ContractViolationError):
        RigidTransform(np.diag([1.0, 1.0, 2.0]), np.zeros(3))


def test_reflection_rejected():
    with pytest.raises(ContractViolationError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_transform_of_empty_cloud_rejected():
    with pytest.raises(ContractViolationError):
        transform_cloud(PointCloud.empty(), RigidTransform.identity(), Frame.WORLD)


@pytest.mark.parametrize(
    "point,offset,expected",
    [
        ((5.0, -3.0, 0.0), 0.0, 0.0),
        ((0.0, 0.0, 2.0), 0.0, 2.0),
        ((1.0, 1.0, 1.0), -0.5, 0.5),
    ],
)
def test_plane_distance(point, offset, expected):
    plane = Plane((0.0, 0.0, 1.0), offset)
    assert plane_distance(Point3(*point), plane) == pytest.approx(expected, abs=1e-12)


def test_plane_from_normal_normalizes():
    plane = Plane.from_normal(np.array([0.0, 0.0, 2.0]), 4.0)
    assert plane.normal == (0.0, 0.0, 1.0)
    assert plane.offset == 2.0


def test_plane_rejects_non_unit_normal():
    with pytest.raises(ContractViolationError):
        Plane((0.0, 0.0, 2.0), 0.0)


def test_identity_pose_gives_identity_transform():
    tf = pose_to_transform(Pose6D.identity())
    np.testing.assert_allclose(tf.rotation, np.eye(3))
    np.testing.assert_allclose(tf.translation, np.zeros(3))


def test_half_turn_yaw_pose():
    pose = Pose6D(np.zeros(3), np.array([0.0, 0.0, 0.0, 1.0]))
    tf = pose_to_transform(pose)
    np.testing.assert_allclose(tf.rotation, np.diag([-1.0, -1.0, 1.0]), atol=1e-12)


def test_non_unit_quaternion_rejected():
    with pytest.raises(ContractViolationError):
        Pose6D(np.zeros(3), np.array([1.0, 1.0, 0.0, 0.0]))


def test_asymmetric_pose_covariance_rejected():
    cov = np.zeros((6, 6))
    cov[0, 1] = 1.0
    with pytest.raises(ContractViolationError):
        Pose6D(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]), cov)


def test_quaternion_from_euler_round_trips_through_pose():
    q = quaternion_from_euler(0.1, -0.2, 1.3)
    assert q[0] >= 0
    np.testing.assert_allclose(Pose6D(np.zeros(3), q).euler(), [0.1, -0.2, 1.3], atol=1e-9)


@pytest.mark.parametrize(
    "angle,expected",
    [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi / 2, -math.pi / 2),
        (-3 * math.pi / 2, math.pi / 2),
    ],
)
def test_wrap_angle(angle, expected):
    assert wrap_angle(angle) == pytest.approx(expected, abs=1e-12)


def test_point_cloud_length_mismatch_rejected():
    with pytest.raises(ContractViolationError):
        PointCloud(np.zeros((3, 3)), np.zeros(2))


def test_point_cloud_rejects_nan():
    with pytest.raises(ContractViolationError):
        PointCloud(np.array([[0.0, np.nan, 0.0]]), np.zeros(1))


def test_point_cloud_is_read_only():
    cloud = _cloud([[1.0, 2.0, 3.0]])
    with pytest.raises(ValueError):
        cloud.xyz[0, 0] = 5.0


def test_point_cloud_select_and_points():
    cloud = PointCloud(np.arange(9.0).reshape(3, 3), np.array([0.1, 0.2, 0.3]))
    picked = cloud.select([2, 0])
    assert len(picked) == 2
    assert picked.points()[0] == Point3(6.0, 7.0, 8.0, 0.3)
    assert PointCloud.from_points([]).is_empty
