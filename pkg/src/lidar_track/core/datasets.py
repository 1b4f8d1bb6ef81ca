# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Frame sources and ground truth for lidar-track.

This module provides the standardized per-frame record every source emits
(KITTI drives and synthetic scenes alike) together with the ground-truth
records used for scoring.
"""

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from .exceptions import DatasetError
from .geometry import PointCloud

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImuSample:
    """Specific force (m/s², gravity included) and angular rate (rad/s), body frame."""

    accel: Tuple[float, float, float]
    gyro: Tuple[float, float, float]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.accel)) and np.all(np.isfinite(self.gyro)))


@dataclass(frozen=True)
class GpsFix:
    lat: float
    lon: float
    alt: float


@dataclass(frozen=True)
class SensorFrame:
    """
    One synchronized sensor sweep.

    Attributes:
        index: zero-based frame number within the stream
        timestamp: seconds, strictly increasing across the stream
        cloud: LiDAR sweep in the sensor frame
        imu: body-frame IMU sample
        gps: GNSS fix
        velocity: world-frame (east, north, up) velocity in m/s
        orientation: OXTS roll, pitch, yaw in radians
    """

    index: int
    timestamp: float
    cloud: PointCloud
    imu: ImuSample
    gps: GpsFix
    velocity: Tuple[float, float, float]
    orientation: Tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class GroundTruthObject:
    object_id: int
    centroid: Tuple[float, float, float]
    point_indices: Tuple[int, ...] = ()


@dataclass(frozen=True)
class GroundTruth:
    """Objects visible in one frame; centroids in the world frame."""

    frame: int
    objects: Tuple[GroundTruthObject, ...] = ()

    def to_record(self) -> Dict:
        return {
            "frame": self.frame,
            "objects": [
                {
                    "object_id": o.object_id,
                    "centroid": [round(float(c), 9) for c in o.centroid],
                    "point_indices": list(o.point_indices),
                }
                for o in self.objects
            ],
        }


class FrameSource(ABC):
    """
    Base class for anything that yields ``SensorFrame`` records in order.

    Subclasses implement ``frames``; ground truth is optional and sources
    without it return ``None`` from ``ground_truth``.
    """

    name: str = "source"

    @abstractmethod
    def frames(self) -> Iterator[SensorFrame]:
        """Yield frames in timestamp order."""

    def ground_truth(self) -> Optional[List[GroundTruth]]:
        return None

    def __iter__(self) -> Iterator[SensorFrame]:
        last: Optional[float] = None
        for frame in self.frames():
            if last is not None and frame.timestamp <= last:
                raise DatasetError(
                    f"Timestamps must be strictly increasing: frame {frame.index} at "
                    f"{frame.timestamp} follows {last}"
                )
            last = frame.timestamp
            yield frame


def write_ground_truth(path: str | Path, records: Iterable[GroundTruth]) -> None:
    """Write ground truth as JSON lines, one frame per line."""
    with open(path, "w") as f:
        for record in records:
            f.write(json.dumps(record.to_record(), separators=(",", ":")) + "\n")


def load_ground_truth(path: str | Path) -> List[GroundTruth]:
    """
    Load ground truth written by ``write_ground_truth``.

    Raises:
        DatasetError: if the file is missing or a record lacks required keys
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"Ground truth file not found: {path}")
    try:
        table = pd.read_json(path, lines=True, dtype=False)
    except ValueError as e:
        raise DatasetError(f"Failed to parse ground truth {path}: {e}")
    if table.empty:
        return []
    if not {"frame", "objects"}.issubset(table.columns):
        raise DatasetError(f"Ground truth {path} must have 'frame' and 'objects' keys")

    records = []
    for frame, objects in zip(table["frame"], table["objects"]):
        records.append(
            GroundTruth(
                frame=int(frame),
                objects=tuple(
                    GroundTruthObject(
                        object_id=int(o["object_id"]),
                        centroid=tuple(float(c) for c in o["centroid"]),
                        point_indices=tuple(int(i) for i in o.get("point_indices", [])),
                    )
                    for o in objects
                ),
            )
        )
    return records
