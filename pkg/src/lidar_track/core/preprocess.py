# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Point-cloud conditioning: range and voxel filtering, RANSAC ground removal and
the sensor-to-world transform.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import ContractViolationError, DegenerateInputError
from .geometry import (
    Frame,
    Plane,
    PointCloud,
    Pose6D,
    RigidTransform,
    pose_to_transform,
    transform_cloud,
)
from .utils.config_utils import require

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterConfig:
    max_range: float = 50.0
    min_range: float = 1.5
    voxel_leaf: float = 0.1

    def __post_init__(self):
        require(
            0.0 <= self.min_range < self.max_range,
            f"need 0 <= min_range < max_range, got {self.min_range}, {self.max_range}",
        )
        require(self.voxel_leaf >= 0.0, "voxel_leaf must be >= 0")


@dataclass(frozen=True)
class RansacConfig:
    distance_threshold: float = 0.15
    max_iterations: int = 200
    min_inlier_fraction: float = 0.2
    rng_seed: int = 0

    def __post_init__(self):
        require(self.distance_threshold > 0, "distance_threshold must be > 0")
        require(self.max_iterations >= 1, "max_iterations must be >= 1")
        require(
            0.0 <= self.min_inlier_fraction <= 1.0,
            "min_inlier_fraction must lie in [0, 1]",
        )


class GroundRemoval(NamedTuple):
    nonground: PointCloud
    plane: Optional[Plane]
    inliers: np.ndarray


def filter_cloud(cloud: PointCloud, cfg: FilterConfig) -> PointCloud:
    """
    Drop points outside ``[min_range, max_range]`` and thin by voxel.

    With ``voxel_leaf > 0`` each occupied voxel is replaced by the centroid of
    its points (intensity averaged too), emitted in lexicographic voxel order.
    """
    if cloud.frame_id != Frame.SENSOR:
        raise ContractViolationError("filter_cloud expects a sensor-frame cloud")
    if cloud.is_empty:
        return cloud

    ranges = np.linalg.norm(cloud.xyz, axis=1)
    keep = (ranges >= cfg.min_range) & (ranges <= cfg.max_range)
    xyz = cloud.xyz[keep]
    intensity = cloud.intensity[keep]
    if cfg.voxel_leaf <= 0.0 or len(xyz) == 0:
        return PointCloud(xyz, intensity, cloud.frame_id, cloud.timestamp)

    keys = np.floor(xyz / cfg.voxel_leaf).astype(np.int64)
    _, inverse, counts = np.unique(
        keys, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inverse, xyz)
    mean_intensity = np.bincount(inverse, weights=intensity, minlength=len(counts))
    return PointCloud(
        sums / counts[:, None],
        mean_intensity / counts,
        cloud.frame_id,
        cloud.timestamp,
    )


def remove_ground(cloud: PointCloud, cfg: RansacConfig) -> GroundRemoval:
    """
    Find the dominant plane with seeded RANSAC and remove its inliers.

    Each iteration fits a plane through three distinct random points; the
    first model reaching the highest inlier count wins. The winning plane is
    refit to its inliers (centroid plus smallest-eigenvector normal, turned
    to point up) and those inliers are removed from the returned cloud.

    Args:
        cloud: cloud with at least three non-collinear points
        cfg: RANSAC parameters, including the seed

    Returns:
        ``GroundRemoval``; when the best model holds fewer than
        ``min_inlier_fraction`` of the points, ``plane`` is None and the
        cloud comes back unchanged

    Raises:
        DegenerateInputError: on fewer than three points or an all-collinear cloud
    """
    n = len(cloud)
    if n < 3:
        raise DegenerateInputError(f"RANSAC needs at least 3 points, got {n}")

    xyz = cloud.xyz
    rng = np.random.default_rng(cfg.rng_seed)
    best_mask: Optional[np.ndarray] = None
    best_count = -1

    for _ in range(cfg.max_iterations):
        sample = xyz[rng.choice(n, size=3, replace=False)]
        normal = np.cross(sample[1] - sample[0], sample[2] - sample[0])
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal /= norm
        distances = np.abs(xyz @ normal - normal @ sample[0])
        mask = distances <= cfg.distance_threshold
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask = count, mask

    if best_mask is None:
        raise DegenerateInputError("Every RANSAC sample was collinear")

    fraction = best_count / n
    if fraction < cfg.min_inlier_fraction:
        logger.warning(
            f"No ground plane found: best inlier fraction {fraction:.3f} < "
            f"{cfg.min_inlier_fraction}"
        )
        return GroundRemoval(cloud, None, np.zeros(0, dtype=np.int64))

    inlier_xyz = xyz[best_mask]
    centroid = inlier_xyz.mean(axis=0)
    centred = inlier_xyz - centroid
    _, vectors = np.linalg.eigh(centred.T @ centred)
    normal = vectors[:, 0]
    if normal[2] < 0:
        normal = -normal
    plane = Plane.from_normal(normal, -float(normal @ centroid))

    inliers = np.flatnonzero(best_mask)
    nonground = cloud.select(np.flatnonzero(~best_mask))
    logger.debug(
        f"Ground plane n={np.round(plane.normal, 3)} d={plane.offset:.3f}, "
        f"removed {len(inliers)}/{n} points"
    )
    return GroundRemoval(nonground, plane, inliers)


def to_world(
    cloud: PointCloud, pose: Pose6D, extrinsic: Optional[RigidTransform] = None
) -> PointCloud:
    """
    Express a sensor-frame cloud in the world frame.

    Args:
        cloud: sensor-frame cloud; may be empty
        pose: ego pose (body to world)
        extrinsic: sensor-to-body transform, identity when omitted
    """
    if cloud.frame_id != Frame.SENSOR:
        raise ContractViolationError("to_world expects a sensor-frame cloud")
    tf = pose_to_transform(pose)
    if extrinsic is not None:
        tf = tf.compose(extrinsic)
    if cloud.is_empty:
        return PointCloud.empty(Frame.WORLD, cloud.timestamp)
    return transform_cloud(cloud, tf, Frame.WORLD)
