# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
KITTI raw-data reader.

This module parses Velodyne sweeps, OXTS GPS/IMU records, timestamps and the
IMU-to-Velodyne calibration of a KITTI raw drive, and writes the same layout
back out for synthetic scenes.
"""

import logging
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

from lidar_track.core.datasets import (
    FrameSource,
    GpsFix,
    GroundTruth,
    ImuSample,
    SensorFrame,
    load_ground_truth,
)
from lidar_track.core.exceptions import DatasetError, MalformedFileError, OxtsParseError
from lidar_track.core.geometry import Frame, PointCloud, RigidTransform

logger = logging.getLogger(__name__)

EARTH_RADIUS = 6378137.0
OXTS_MIN_FIELDS = 30

# 0-based OXTS column positions
OXTS_LAT, OXTS_LON, OXTS_ALT = 0, 1, 2
OXTS_ROLL, OXTS_PITCH, OXTS_YAW = 3, 4, 5
OXTS_VN, OXTS_VE, OXTS_VF, OXTS_VL, OXTS_VU = 6, 7, 8, 9, 10
OXTS_AX, OXTS_AY, OXTS_AZ = 11, 12, 13
OXTS_WX, OXTS_WY, OXTS_WZ = 17, 18, 19

# tail of a valid record after the 23 kinematic columns
_OXTS_STATUS_TAIL = "0.05 0.05 4 10 5 5 0"


@dataclass(frozen=True)
class OxtsRecord:
    """One OXTS line. Velocities are north/east/forward/left/up as recorded."""

    gps: GpsFix
    orientation: Tuple[float, float, float]
    vn: float
    ve: float
    vf: float
    vl: float
    vu: float
    imu: ImuSample

    @property
    def world_velocity(self) -> Tuple[float, float, float]:
        """(east, north, up), matching the local metric frame axes."""
        return (self.ve, self.vn, self.vu)


def read_velodyne_bin(path: str | Path, timestamp: float = 0.0) -> PointCloud:
    """
    Read a KITTI Velodyne sweep.

    Each point is four little-endian float32 values: x, y, z, reflectance.
    Points with a NaN coordinate are dropped and counted in a warning.

    Raises:
        MalformedFileError: if the file length is not a multiple of 16 bytes
    """
    raw = Path(path).read_bytes()
    if len(raw) % 16 != 0:
        raise MalformedFileError(
            f"{path}: length {len(raw)} is not a multiple of 16 bytes"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(-1, 4).astype(np.float64)
    finite = np.all(np.isfinite(data[:, :3]), axis=1)
    dropped = int((~finite).sum())
    if dropped:
        logger.warning(f"{path}: dropped {dropped} points with non-finite coordinates")
        data = data[finite]
    return PointCloud(data[:, :3], data[:, 3], Frame.SENSOR, timestamp)


def write_velodyne_bin(path: str | Path, cloud: PointCloud) -> None:
    packed = np.empty((len(cloud), 4), dtype="<f4")
    packed[:, :3] = cloud.xyz
    packed[:, 3] = cloud.intensity
    Path(path).write_bytes(packed.tobytes())


def _parse_oxts_line(line: str, line_number: int) -> OxtsRecord:
    fields = line.split()
    if len(fields) < OXTS_MIN_FIELDS:
        raise OxtsParseError(
            f"expected at least {OXTS_MIN_FIELDS} fields, found {len(fields)}",
            line_number,
        )
    values = []
    for column, text in enumerate(fields):
        try:
            values.append(float(text))
        except ValueError:
            raise OxtsParseError(
                f"field {column + 1} is not numeric: {text!r}", line_number
            )
    return OxtsRecord(
        gps=GpsFix(values[OXTS_LAT], values[OXTS_LON], values[OXTS_ALT]),
        orientation=(values[OXTS_ROLL], values[OXTS_PITCH], values[OXTS_YAW]),
        vn=values[OXTS_VN],
        ve=values[OXTS_VE],
        vf=values[OXTS_VF],
        vl=values[OXTS_VL],
        vu=values[OXTS_VU],
        imu=ImuSample(
            accel=(values[OXTS_AX], values[OXTS_AY], values[OXTS_AZ]),
            gyro=(values[OXTS_WX], values[OXTS_WY], values[OXTS_WZ]),
        ),
    )


def read_oxts(path: str | Path) -> List[OxtsRecord]:
    """
    Parse an OXTS text file; one record per non-blank line, in file order.

    Raises:
        OxtsParseError: on a short line or a non-numeric field, with its line number
    """
    records = []
    with open(path, "r") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            records.append(_parse_oxts_line(line, line_number))
    return records


def write_oxts(
    path: str | Path,
    gps: GpsFix,
    orientation: Sequence[float],
    velocity_enu: Sequence[float],
    imu: ImuSample,
) -> None:
    """Write a single OXTS record; forward/left velocity derived from yaw."""
    ve, vn, vu = (float(v) for v in velocity_enu)
    yaw = float(orientation[2])
    vf = ve * math.cos(yaw) + vn * math.sin(yaw)
    vl = -ve * math.sin(yaw) + vn * math.cos(yaw)
    ax, ay, az = imu.accel
    wx, wy, wz = imu.gyro
    # fmt: off
    columns = [
        gps.lat, gps.lon, gps.alt,
        *orientation,
        vn, ve, vf, vl, vu,
        ax, ay, az,
        ax, ay, az,
        wx, wy, wz,
        wx, wy, wz,
    ]
    # fmt: on
    text = " ".join(repr(float(c)) for c in columns)
    Path(path).write_text(f"{text} {_OXTS_STATUS_TAIL}\n")


def _mercator_scale(lat0: float) -> float:
    return math.cos(lat0 * math.pi / 180.0)


def gps_to_local(gps: GpsFix, origin: GpsFix) -> Tuple[float, float]:
    """
    Project ``gps`` to metres east/north of ``origin``.

    Uses the Mercator projection with scale ``cos(origin_lat)``; ``origin``
    maps to ``(0, 0)``. Latitudes must lie within ±85°.
    """
    scale = _mercator_scale(origin.lat)

    def project(fix: GpsFix) -> Tuple[float, float]:
        mx = scale * EARTH_RADIUS * fix.lon * math.pi / 180.0
        my = scale * EARTH_RADIUS * math.log(math.tan((90.0 + fix.lat) * math.pi / 360.0))
        return mx, my

    x, y = project(gps)
    x0, y0 = project(origin)
    return x - x0, y - y0


def local_to_gps(x: float, y: float, origin: GpsFix, alt: float = 0.0) -> GpsFix:
    """Inverse of ``gps_to_local``; ``alt`` is passed through."""
    scale = _mercator_scale(origin.lat)
    mx0 = scale * EARTH_RADIUS * origin.lon * math.pi / 180.0
    my0 = scale * EARTH_RADIUS * math.log(math.tan((90.0 + origin.lat) * math.pi / 360.0))
    lon = (x + mx0) * 180.0 / (math.pi * EARTH_RADIUS * scale)
    lat = 360.0 * math.atan(math.exp((y + my0) / (EARTH_RADIUS * scale))) / math.pi - 90.0
    return GpsFix(lat, lon, alt)


def read_timestamps(path: str | Path) -> np.ndarray:
    """
    Parse a KITTI ``timestamps.txt`` (ISO 8601 with nanoseconds).

    Returns:
        seconds since the first timestamp, float64
    """
    with open(path, "r") as f:
        lines = [line.strip() for line in f if line.strip()]
    if not lines:
        return np.zeros(0)
    try:
        stamps = pd.to_datetime(pd.Series(lines))
    except (ValueError, TypeError) as e:
        raise DatasetError(f"Failed to parse timestamps in {path}: {e}")
    return (stamps - stamps.iloc[0]).dt.total_seconds().to_numpy(dtype=np.float64)


def write_timestamps(
    path: str | Path, seconds: Sequence[float], start: Optional[datetime] = None
) -> None:
    base = pd.Timestamp(start or datetime(2011, 9, 26, 13, 0, 0))
    lines = []
    for t in seconds:
        ts = base + pd.Timedelta(nanoseconds=int(round(float(t) * 1e9)))
        frac = ts.microsecond * 1000 + ts.nanosecond
        lines.append(f"{ts.strftime('%Y-%m-%d %H:%M:%S')}.{frac:09d}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_calibration(path: str | Path) -> RigidTransform:
    """
    Parse ``calib_imu_to_velo.txt`` into the IMU-to-Velodyne transform.

    The stored rotation is projected back onto SO(3); published KITTI files
    carry only about six significant digits.
    """
    entries = {}
    with open(path, "r") as f:
        for line in f:
            key, _, value = line.partition(":")
            entries[key.strip()] = value.strip()
    try:
        rotation = np.array([float(v) for v in entries["R"].split()]).reshape(3, 3)
        translation = np.array([float(v) for v in entries["T"].split()]).reshape(3)
    except (KeyError, ValueError) as e:
        raise DatasetError(f"Calibration file {path} needs 'R' (9) and 'T' (3): {e}")
    rotation = Rotation.from_matrix(rotation).as_matrix()
    return RigidTransform(rotation, translation)


def write_calibration(path: str | Path, tf: RigidTransform) -> None:
    r = " ".join(repr(float(v)) for v in tf.rotation.reshape(-1))
    t = " ".join(repr(float(v)) for v in tf.translation)
    Path(path).write_text(f"calib_time: synthetic\nR: {r}\nT: {t}\n")


class KittiRawSource(FrameSource):
    """
    Frame source over one KITTI raw drive directory.

    Expected layout::

        <drive>/velodyne_points/data/NNNNNNNNNN.bin
        <drive>/velodyne_points/timestamps.txt
        <drive>/oxts/data/NNNNNNNNNN.txt
        <drive>/calib_imu_to_velo.txt        (optional, also looked up one level up)
        <drive>/ground_truth.jsonl           (optional)
    """

    name = "kitti"

    def __init__(self, drive_dir: str | Path, max_frames: Optional[int] = None):
        self.drive_dir = Path(drive_dir)
        if not self.drive_dir.is_dir():
            raise DatasetError(f"KITTI drive directory not found: {self.drive_dir}")
        self.max_frames = max_frames

        velo_dir = self.drive_dir / "velodyne_points" / "data"
        self.bin_paths = sorted(velo_dir.glob("*.bin"))
        if not self.bin_paths:
            raise DatasetError(f"No Velodyne sweeps under {velo_dir}")
        self.oxts_dir = self.drive_dir / "oxts" / "data"
        if not self.oxts_dir.is_dir():
            raise DatasetError(f"OXTS directory not found: {self.oxts_dir}")

        self.timestamps = self._load_timestamps()
        if len(self.timestamps) < len(self.bin_paths):
            raise DatasetError(
                f"{len(self.timestamps)} timestamps for {len(self.bin_paths)} sweeps"
            )

        self.extrinsic = self._load_extrinsic()
        logger.info(
            f"KITTI drive {self.drive_dir.name}: {len(self.bin_paths)} sweeps, "
            f"calibration={'file' if self._calibrated else 'identity'}"
        )

    def _load_timestamps(self) -> np.ndarray:
        for candidate in (
            self.drive_dir / "velodyne_points" / "timestamps.txt",
            self.drive_dir / "oxts" / "timestamps.txt",
        ):
            if candidate.exists():
                return read_timestamps(candidate)
        # no timestamps: assume the nominal 10 Hz sweep rate
        logger.warning(f"No timestamps.txt in {self.drive_dir}; assuming 10 Hz")
        return np.arange(len(self.bin_paths), dtype=np.float64) * 0.1

    def _load_extrinsic(self) -> RigidTransform:
        """Velodyne-to-IMU transform (inverse of the stored IMU-to-Velodyne)."""
        self._calibrated = False
        for candidate in (
            self.drive_dir / "calib_imu_to_velo.txt",
            self.drive_dir.parent / "calib_imu_to_velo.txt",
        ):
            if candidate.exists():
                self._calibrated = True
                return read_calibration(candidate).inverse()
        return RigidTransform.identity()

    def frames(self) -> Iterator[SensorFrame]:
        paths = self.bin_paths
        if self.max_frames is not None:
            paths = paths[: self.max_frames]
        for index, bin_path in enumerate(paths):
            timestamp = float(self.timestamps[index])
            oxts_path = self.oxts_dir / f"{bin_path.stem}.txt"
            if not oxts_path.exists():
                raise DatasetError(f"Missing OXTS record for sweep {bin_path.name}")
            records = read_oxts(oxts_path)
            if not records:
                raise DatasetError(f"Empty OXTS record {oxts_path}")
            oxts = records[0]
            yield SensorFrame(
                index=index,
                timestamp=timestamp,
                cloud=read_velodyne_bin(bin_path, timestamp),
                imu=oxts.imu,
                gps=oxts.gps,
                velocity=oxts.world_velocity,
                orientation=oxts.orientation,
            )

    def ground_truth(self) -> Optional[List[GroundTruth]]:
        path = self.drive_dir / "ground_truth.jsonl"
        if not path.exists():
            return None
        return load_ground_truth(path)
