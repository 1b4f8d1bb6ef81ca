# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Synthetic scene support for lidar-track.

This package generates seeded LiDAR sweeps of moving shapes over a ground
plane, with exact ground truth, for desk-scale verification.
"""

from .generator import (
    EgoPath,
    GroundSpec,
    Shape,
    SyntheticObject,
    SyntheticScenario,
    SyntheticSource,
    frame_truth,
    generate_synthetic,
    load_scenario,
    materialize_scenario,
)

__all__ = [
    "EgoPath",
    "GroundSpec",
    "Shape",
    "SyntheticObject",
    "SyntheticScenario",
    "SyntheticSource",
    "frame_truth",
    "generate_synthetic",
    "load_scenario",
    "materialize_scenario",
]
