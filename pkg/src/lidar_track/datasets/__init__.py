# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Frame sources for lidar-track.

Each sub-package turns one kind of input (a KITTI raw drive, a synthetic
scenario) into the standardized SensorFrame stream of lidar_track.core.datasets.
"""
