# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
KITTI raw-data support for lidar-track.

This package reads Velodyne sweeps, OXTS records, timestamps and calibration
from a KITTI raw drive directory.
"""

from .adapter import (
    KittiRawSource,
    OxtsRecord,
    gps_to_local,
    local_to_gps,
    read_calibration,
    read_oxts,
    read_timestamps,
    read_velodyne_bin,
    write_calibration,
    write_oxts,
    write_timestamps,
    write_velodyne_bin,
)

__all__ = [
    "KittiRawSource",
    "OxtsRecord",
    "gps_to_local",
    "local_to_gps",
    "read_calibration",
    "read_oxts",
    "read_timestamps",
    "read_velodyne_bin",
    "write_calibration",
    "write_oxts",
    "write_timestamps",
    "write_velodyne_bin",
]
