# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Geometry and coordinate-frame primitives.

Every stage of the pipeline passes these values around: points and clouds,
rigid transforms, planes and 6D poses. All of them are immutable; arrays held
by a value are private copies marked read-only.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .exceptions import ContractViolationError

ORTHONORMAL_TOL = 1e-9
UNIT_TOL = 1e-9


class Frame(str, Enum):
    """Coordinate frame a cloud is expressed in."""

    SENSOR = "sensor"
    WORLD = "world"


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float
    intensity: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise ContractViolationError(
                f"Point coordinates must be finite, got ({self.x}, {self.y}, {self.z})"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    Ordered points with per-point intensity in one coordinate frame.

    Attributes:
        xyz: (N, 3) float64 coordinates in metres
        intensity: (N,) float64 reflectance in [0, 1]
        frame_id: frame every point is expressed in
        timestamp: seconds, non-decreasing across a frame stream
    """

    xyz: np.ndarray
    intensity: np.ndarray
    frame_id: Frame = Frame.SENSOR
    timestamp: float = 0.0

    def __post_init__(self):
        xyz = _frozen(np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3))
        intensity = _frozen(np.asarray(self.intensity, dtype=np.float64).reshape(-1))
        if intensity.shape[0] != xyz.shape[0]:
            raise ContractViolationError(
                f"intensity has {intensity.shape[0]} values for {xyz.shape[0]} points"
            )
        if not np.all(np.isfinite(xyz)):
            raise ContractViolationError("Point cloud contains non-finite coordinates")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "intensity", intensity)

    def __len__(self) -> int:
        return int(self.xyz.shape[0])

    @property
    def is_empty(self) -> bool:
        return len(self) == 0

    def select(self, indices: Sequence[int] | np.ndarray) -> "PointCloud":
        idx = np.asarray(indices, dtype=np.int64)
        return PointCloud(
            xyz=self.xyz[idx],
            intensity=self.intensity[idx],
            frame_id=self.frame_id,
            timestamp=self.timestamp,
        )

    def with_points(self, xyz: np.ndarray, frame_id: Optional[Frame] = None):
        """Same intensities and timestamp, new coordinates."""
        return PointCloud(
            xyz=xyz,
            intensity=self.intensity,
            frame_id=frame_id or self.frame_id,
            timestamp=self.timestamp,
        )

    @classmethod
    def empty(cls, frame_id: Frame = Frame.SENSOR, timestamp: float = 0.0):
        return cls(np.zeros((0, 3)), np.zeros(0), frame_id, timestamp)

    @classmethod
    def from_points(
        cls,
        points: Sequence[Point3],
        frame_id: Frame = Frame.SENSOR,
        timestamp: float = 0.0,
    ) -> "PointCloud":
        if not points:
            return cls.empty(frame_id, timestamp)
        xyz = np.array([[p.x, p.y, p.z] for p in points], dtype=np.float64)
        intensity = np.array([p.intensity for p in points], dtype=np.float64)
        return cls(xyz, intensity, frame_id, timestamp)

    def points(self) -> list[Point3]:
        return [
            Point3(float(x), float(y), float(z), float(i))
            for (x, y, z), i in zip(self.xyz, self.intensity)
        ]


@dataclass(frozen=True, eq=False)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = _frozen(np.asarray(self.rotation, dtype=np.float64))
        translation = _frozen(np.asarray(self.translation, dtype=np.float64))
        if rotation.shape != (3, 3) or translation.shape != (3,):
            raise ContractViolationError(
                f"Expected 3x3 rotation and 3-vector translation, got "
                f"{rotation.shape} and {translation.shape}"
            )
        if not np.allclose(rotation @ rotation.T, np.eye(3), rtol=0, atol=ORTHONORMAL_TOL):
            raise ContractViolationError("Rotation matrix is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOL:
            raise ContractViolationError("Rotation matrix determinant is not +1")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, xyz: np.ndarray) -> np.ndarray:
        return np.asarray(xyz, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self ∘ other``: apply ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True, eq=False)
class Pose6D:
    """
    Ego position and attitude with covariance.

    The quaternion is scalar-first ``(w, x, y, z)``. The covariance orders its
    axes as ``(x, y, z, roll, pitch, yaw)``.
    """

    position: np.ndarray
    quaternion: np.ndarray
    covariance: np.ndarray = field(default_factory=lambda: np.zeros((6, 6)))
    timestamp: float = 0.0

    def __post_init__(self):
        position = _frozen(np.asarray(self.position).reshape(3))
        quaternion = _frozen(np.asarray(self.quaternion).reshape(4))
        covariance = _frozen(np.asarray(self.covariance).reshape(6, 6))
        if abs(np.linalg.norm(quaternion) - 1.0) > UNIT_TOL:
            raise ContractViolationError(
                f"Pose quaternion must have unit norm, got {np.linalg.norm(quaternion)}"
            )
        if not np.allclose(covariance, covariance.T, rtol=0, atol=1e-9):
            raise ContractViolationError("Pose covariance is not symmetric")
        if np.linalg.eigvalsh(covariance).min() < -1e-9:
            raise ContractViolationError("Pose covariance is not positive semi-definite")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "quaternion", quaternion)
        object.__setattr__(self, "covariance", covariance)

    @classmethod
    def identity(cls, timestamp: float = 0.0) -> "Pose6D":
        return cls(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]), np.zeros((6, 6)), timestamp)

    def euler(self) -> np.ndarray:
        """Roll, pitch, yaw in radians."""
        return Rotation.from_quat(self.quaternion, scalar_first=True).as_euler("xyz")


@dataclass(frozen=True)
class Plane:
    """Plane ``a·x + b·y + c·z + d = 0`` with a unit normal ``(a, b, c)``."""

    normal: tuple[float, float, float]
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
            raise ContractViolationError(f"Plane normal must be a unit 3-vector, got {self.normal}")
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_normal(cls, normal: np.ndarray, offset: float) -> "Plane":
        """Normalizes ``normal`` (and scales ``offset``) before validation."""
        n = np.asarray(normal, dtype=np.float64)
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ContractViolationError("Plane normal must be non-zero")
        return cls(tuple(n / norm), offset / norm)


def plane_distance(p: Point3 | np.ndarray, plane: Plane) -> float:
    """Signed distance of ``p`` from ``plane``."""
    xyz = p.as_array() if isinstance(p, Point3) else np.asarray(p, dtype=np.float64)
    return float(np.dot(plane.normal, xyz) + plane.offset)


def plane_distances(xyz: np.ndarray, plane: Plane) -> np.ndarray:
    return np.asarray(xyz, dtype=np.float64) @ np.asarray(plane.normal) + plane.offset


def transform_cloud(
    cloud: PointCloud, tf: RigidTransform, target_frame: Frame
) -> PointCloud:
    """
    Apply ``tf`` to every point: ``p' = R·p + t``.

    Args:
        cloud: non-empty cloud
        tf: validated rigid transform
        target_frame: frame of the returned cloud

    Raises:
        ContractViolationError: if the cloud is empty
    """
    if cloud.is_empty:
        raise ContractViolationError("transform_cloud requires a non-empty cloud")
    return cloud.with_points(tf.apply(cloud.xyz), frame_id=target_frame)


def pose_to_transform(pose: Pose6D) -> RigidTransform:
    q = np.asarray(pose.quaternion, dtype=np.float64)
    if abs(np.linalg.norm(q) - 1.0) > UNIT_TOL:
        raise ContractViolationError("Pose quaternion must have unit norm")
    rotation = Rotation.from_quat(q, scalar_first=True).as_matrix()
    return RigidTransform(rotation, pose.position)


def quaternion_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Scalar-first unit quaternion for extrinsic x-y-z Euler angles."""
    q = Rotation.from_euler("xyz", [roll, pitch, yaw]).as_quat(scalar_first=True)
    # keep w >= 0 so equal attitudes give equal quaternions
    return q if q[0] >= 0 else -q


def wrap_angle(angle: float) -> float:
    """Wrap to (−π, π]."""
    wrapped = (angle + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.pi if wrapped == -np.pi else wrapped)
