# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Ego-pose strategies.

A strategy turns the per-frame GPS/IMU/velocity readings into the ego pose
used to bring LiDAR points into the world frame. The world frame is the local
east/north/up frame anchored at the first GPS fix of the run.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Optional

import numpy as np

from ..datasets.kitti.adapter import gps_to_local
from .datasets import GpsFix, SensorFrame
from .exceptions import ConfigError, MeasurementRejectedError
from .geometry import Pose6D, quaternion_from_euler
from .pose_ekf import (
    MAX_PREDICT_DT,
    EgoState,
    EkfConfig,
    correct_gps,
    correct_velocity,
    pose_of,
    predict,
)

logger = logging.getLogger(__name__)


def local_position(gps: GpsFix, origin: GpsFix) -> np.ndarray:
    x, y = gps_to_local(gps, origin)
    return np.array([x, y, gps.alt - origin.alt])


def oxts_pose(frame: SensorFrame, origin: GpsFix) -> Pose6D:
    """The pose the raw GPS fix and OXTS attitude describe, without filtering."""
    return Pose6D(
        local_position(frame.gps, origin),
        quaternion_from_euler(*frame.orientation),
        np.zeros((6, 6)),
        frame.timestamp,
    )


class BasePoseStrategy(ABC):
    """
    Base class for ego-pose strategies.

    The first frame fixes the local origin; ``update`` must be called once per
    frame in stream order.
    """

    name = "base"

    def __init__(self):
        self.origin: Optional[GpsFix] = None

    def _anchor(self, frame: SensorFrame) -> GpsFix:
        if self.origin is None:
            self.origin = frame.gps
            logger.debug(
                f"Local frame anchored at lat={frame.gps.lat:.7f} lon={frame.gps.lon:.7f}"
            )
        return self.origin

    @abstractmethod
    def update(self, frame: SensorFrame) -> Pose6D:
        """
        Consume one frame's navigation data.

        Args:
            frame: the current sensor frame

        Returns:
            The ego pose (body to world) at the frame timestamp
        """


class PassthroughPoseStrategy(BasePoseStrategy):
    """Uses the OXTS pose as-is, isolating tracking from pose error."""

    name = "passthrough"

    def update(self, frame: SensorFrame) -> Pose6D:
        return oxts_pose(frame, self._anchor(frame))


class EkfPoseStrategy(BasePoseStrategy):
    """
    IMU-predicted, GPS- and velocity-corrected pose.

    A non-finite GPS or velocity reading is skipped for that frame and logged;
    the prediction still runs.
    """

    name = "ekf"

    def __init__(self, cfg: EkfConfig = EkfConfig()):
        super().__init__()
        self.cfg = cfg
        self.state: Optional[EgoState] = None
        self.rejected = 0
        self.restarts = 0

    def _restart(self, frame: SensorFrame, position: np.ndarray) -> Pose6D:
        self.state = EgoState.initial(
            position, frame.velocity, frame.orientation, self.cfg, frame.timestamp
        )
        return pose_of(self.state)

    def update(self, frame: SensorFrame) -> Pose6D:
        origin = self._anchor(frame)
        position = local_position(frame.gps, origin)
        if self.state is None:
            return self._restart(frame, position)

        dt = frame.timestamp - self.state.timestamp
        if dt >= MAX_PREDICT_DT:
            self.restarts += 1
            logger.warning(
                f"Frame {frame.index}: {dt:.3f}s since the last frame, "
                "re-initializing the ego filter from the GPS fix"
            )
            return self._restart(frame, position)
        state = predict(self.state, frame.imu, dt, self.cfg)
        for correction, measurement in (
            (correct_gps, position),
            (correct_velocity, frame.velocity),
        ):
            try:
                state = correction(state, measurement, self.cfg)
            except MeasurementRejectedError as e:
                self.rejected += 1
                logger.warning(f"Frame {frame.index}: {e}")
        self.state = replace(state, timestamp=frame.timestamp)
        return pose_of(self.state)


def create_pose_strategy(mode: str, cfg: EkfConfig = EkfConfig()) -> BasePoseStrategy:
    if mode == "ekf":
        return EkfPoseStrategy(cfg)
    if mode == "passthrough":
        return PassthroughPoseStrategy()
    raise ConfigError(f"Unknown pose mode '{mode}', expected 'ekf' or 'passthrough'")


def translation_error(estimate: Pose6D, reference: Pose6D) -> float:
    return float(np.linalg.norm(estimate.position - reference.position))
