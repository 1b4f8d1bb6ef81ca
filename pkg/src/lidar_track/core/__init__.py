# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Core module for LiDAR object tracking.

This module provides the per-frame algorithms: preprocessing, clustering,
descriptors, association, track motion and the ego-pose filter. The pipeline
runner lives in ``lidar_track.core.pipeline``.
"""

from .association import AssociationConfig, associate_frame, gate, mdt_score, resolve
from .descriptor import VfhDescriptor, chi_squared_distance, compute_vfh, estimate_normals
from .exceptions import (
    ConfigError,
    ContractViolationError,
    DatasetError,
    PipelineAbort,
)
from .geometry import Frame, Plane, PointCloud, Pose6D, RigidTransform
from .pose_ekf import EgoState, EkfConfig, correct_gps, correct_velocity, pose_of, predict
from .preprocess import filter_cloud, remove_ground, to_world
from .segmentation import DbscanConfig, build_kdtree, dbscan
from .tracker import Track, TrackManager, init_track, predict_motion, update_motion

__all__ = [
    "AssociationConfig",
    "associate_frame",
    "gate",
    "mdt_score",
    "resolve",
    "VfhDescriptor",
    "chi_squared_distance",
    "compute_vfh",
    "estimate_normals",
    "ConfigError",
    "ContractViolationError",
    "DatasetError",
    "PipelineAbort",
    "Frame",
    "Plane",
    "PointCloud",
    "Pose6D",
    "RigidTransform",
    "EgoState",
    "EkfConfig",
    "correct_gps",
    "correct_velocity",
    "pose_of",
    "predict",
    "filter_cloud",
    "remove_ground",
    "to_world",
    "DbscanConfig",
    "build_kdtree",
    "dbscan",
    "Track",
    "TrackManager",
    "init_track",
    "predict_motion",
    "update_motion",
]
