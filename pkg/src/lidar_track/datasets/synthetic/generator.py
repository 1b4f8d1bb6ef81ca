# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Deterministic synthetic LiDAR scenes.

A scenario is a handful of rigid shapes moving at constant velocity over a
noisy ground plane, seen from an ego sensor that also moves at constant
velocity. Every random draw comes from one seeded generator consumed in a
fixed order, so a scenario and its seed fully determine the emitted stream.

Scenario coordinates put the ground at ``z = 0`` with the ego starting at the
origin. The pipeline's world frame is anchored at the ego *sensor* start
position, so ground-truth centroids are reported shifted down by the sensor
height.
"""

import logging
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
import yaml
from scipy.spatial.transform import Rotation

from lidar_track.core.datasets import (
    FrameSource,
    GpsFix,
    GroundTruth,
    GroundTruthObject,
    ImuSample,
    SensorFrame,
    write_ground_truth,
)
from lidar_track.core.exceptions import ConfigError, DatasetError
from lidar_track.core.geometry import Frame, PointCloud
from lidar_track.datasets.kitti.adapter import (
    local_to_gps,
    write_oxts,
    write_timestamps,
    write_velodyne_bin,
)

logger = logging.getLogger(__name__)

GRAVITY = 9.81
OBJECT_INTENSITY = 0.5
GROUND_INTENSITY = 0.1


class Shape(str, Enum):
    BOX = "box"
    CYLINDER = "cylinder"
    SPHERE = "sphere"


def _vector(values: Any, length: int, name: str, pad: float = 0.0) -> Tuple[float, ...]:
    try:
        items = [float(v) for v in values]
    except TypeError:
        raise ConfigError(f"'{name}' must be a list of numbers, got {values!r}")
    if len(items) == length - 1:
        items.append(pad)
    if len(items) != length:
        raise ConfigError(f"'{name}' needs {length} values, got {len(items)}")
    return tuple(items)


def _check_keys(cls, data: Dict[str, Any], where: str) -> None:
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"Unknown {where} keys: {sorted(unknown)}")


@dataclass(frozen=True)
class SyntheticObject:
    """
    One rigid, axis-aligned shape.

    ``size`` is the (dx, dy, dz) extent; cylinders use dx as diameter and dz
    as height, spheres use dx as diameter. A two-element ``position`` places
    the shape resting on the ground.
    """

    shape: Shape
    size: Tuple[float, float, float]
    position: Tuple[float, float, float]
    velocity: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    points: Optional[int] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SyntheticObject":
        _check_keys(cls, data, "object")
        try:
            shape = Shape(data.get("shape", "box"))
        except ValueError:
            raise ConfigError(f"Unknown shape {data.get('shape')!r}")
        size = _vector(data.get("size", [1.0, 1.0, 1.0]), 3, "size")
        if min(size) <= 0:
            raise ConfigError(f"Object size must be positive, got {size}")
        height = size[0] if shape == Shape.SPHERE else size[2]
        position = _vector(data.get("position", [0.0, 0.0]), 3, "position", height / 2)
        velocity = _vector(data.get("velocity", [0.0, 0.0]), 3, "velocity")
        points = data.get("points")
        return cls(shape, size, position, velocity, int(points) if points else None)

    def centre_at(self, t: float) -> np.ndarray:
        return np.asarray(self.position) + np.asarray(self.velocity) * t


@dataclass(frozen=True)
class EgoPath:
    velocity: Tuple[float, float] = (0.0, 0.0)
    yaw: float = 0.0
    sensor_height: float = 1.73

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EgoPath":
        _check_keys(cls, data, "ego")
        return cls(
            velocity=_vector(data.get("velocity", [0.0, 0.0]), 2, "ego.velocity"),
            yaw=float(data.get("yaw", 0.0)),
            sensor_height=float(data.get("sensor_height", 1.73)),
        )

    def sensor_at(self, t: float) -> np.ndarray:
        return np.array(
            [self.velocity[0] * t, self.velocity[1] * t, self.sensor_height]
        )


@dataclass(frozen=True)
class GroundSpec:
    noise_sigma: float = 0.02
    extent: float = 30.0
    points: int = 2000

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundSpec":
        _check_keys(cls, data, "ground")
        return cls(
            noise_sigma=float(data.get("noise_sigma", 0.02)),
            extent=float(data.get("extent", 30.0)),
            points=int(data.get("points", 2000)),
        )


@dataclass(frozen=True)
class SyntheticScenario:
    objects: Tuple[SyntheticObject, ...] = ()
    ego: EgoPath = field(default_factory=EgoPath)
    ground: GroundSpec = field(default_factory=GroundSpec)
    points_per_object: int = 400
    frames: int = 20
    rate_hz: float = 10.0
    seed: int = 0
    sensor_range: float = 50.0
    origin: Tuple[float, float, float] = (49.0, 8.4, 100.0)
    name: str = "scenario"

    def __post_init__(self):
        if self.frames < 1 or self.rate_hz <= 0 or self.points_per_object < 1:
            raise ConfigError("Scenario needs frames >= 1, rate_hz > 0, points >= 1")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = "scenario") -> "SyntheticScenario":
        _check_keys(cls, data, "scenario")
        return cls(
            objects=tuple(SyntheticObject.from_dict(o) for o in data.get("objects") or []),
            ego=EgoPath.from_dict(data.get("ego") or {}),
            ground=GroundSpec.from_dict(data.get("ground") or {}),
            points_per_object=int(data.get("points_per_object", 400)),
            frames=int(data.get("frames", 20)),
            rate_hz=float(data.get("rate_hz", 10.0)),
            seed=int(data.get("seed", 0)),
            sensor_range=float(data.get("sensor_range", 50.0)),
            origin=_vector(data.get("origin", [49.0, 8.4, 100.0]), 3, "origin"),
            name=str(data.get("name", name)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "frames": self.frames,
            "rate_hz": self.rate_hz,
            "seed": self.seed,
            "points_per_object": self.points_per_object,
            "sensor_range": self.sensor_range,
            "origin": list(self.origin),
            "ego": {
                "velocity": list(self.ego.velocity),
                "yaw": self.ego.yaw,
                "sensor_height": self.ego.sensor_height,
            },
            "ground": {
                "noise_sigma": self.ground.noise_sigma,
                "extent": self.ground.extent,
                "points": self.ground.points,
            },
            "objects": [
                {
                    "shape": o.shape.value,
                    "size": list(o.size),
                    "position": list(o.position),
                    "velocity": list(o.velocity),
                    **({"points": o.points} if o.points else {}),
                }
                for o in self.objects
            ],
        }

    def with_overrides(self, seed: Optional[int] = None, frames: Optional[int] = None):
        data = self.to_dict()
        if seed is not None:
            data["seed"] = seed
        if frames is not None:
            data["frames"] = frames
        return SyntheticScenario.from_dict(data, self.name)

    def point_count(self, obj: SyntheticObject) -> int:
        return obj.points or self.points_per_object


def load_scenario(name_or_path: str | Path) -> SyntheticScenario:
    """
    Load a bundled preset by name or a scenario YAML file by path.

    Raises:
        ConfigError: if neither a preset nor a readable file matches
    """
    from lidar_track.templates import get_scenario_path

    path = get_scenario_path(str(name_or_path))
    if path is None:
        path = Path(name_or_path)
    if not Path(path).exists():
        raise ConfigError(f"Scenario not found: {name_or_path}")
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Failed to parse scenario {path}: {e}")
    return SyntheticScenario.from_dict(data, name=Path(path).stem)


# ---- surface sampling ------------------------------------------------------


def _sample_box(rng: np.random.Generator, size: np.ndarray, n: int) -> np.ndarray:
    half = size / 2.0
    areas = np.array(
        [size[1] * size[2]] * 2 + [size[0] * size[2]] * 2 + [size[0] * size[1]] * 2
    )
    face = rng.choice(6, size=n, p=areas / areas.sum())
    pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * half
    axis = face // 2
    sign = np.where(face % 2 == 1, 1.0, -1.0)
    pts[np.arange(n), axis] = sign * half[axis]
    return pts


def _sample_cylinder(rng: np.random.Generator, size: np.ndarray, n: int) -> np.ndarray:
    r, h = size[0] / 2.0, size[2]
    areas = np.array([2 * math.pi * r * h, math.pi * r * r, math.pi * r * r])
    part = rng.choice(3, size=n, p=areas / areas.sum())
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    z = rng.uniform(-h / 2, h / 2, size=n)
    radial = np.sqrt(rng.uniform(0.0, 1.0, size=n)) * r
    radius = np.where(part == 0, r, radial)
    z = np.where(part == 1, h / 2, np.where(part == 2, -h / 2, z))
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta), z])


def _sample_sphere(rng: np.random.Generator, size: np.ndarray, n: int) -> np.ndarray:
    g = rng.standard_normal(size=(n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True) * (size[0] / 2.0)


_SAMPLERS = {
    Shape.BOX: _sample_box,
    Shape.CYLINDER: _sample_cylinder,
    Shape.SPHERE: _sample_sphere,
}


# ---- stream ----------------------------------------------------------------


def _visible(scenario: SyntheticScenario, t: float) -> List[int]:
    sensor = scenario.ego.sensor_at(t)
    return [
        i
        for i, obj in enumerate(scenario.objects)
        if np.linalg.norm(obj.centre_at(t) - sensor) <= scenario.sensor_range
    ]


def frame_truth(scenario: SyntheticScenario, k: int) -> GroundTruth:
    """Ground truth of frame ``k``; needs no random draws."""
    t = k / scenario.rate_hz
    shift = np.array([0.0, 0.0, scenario.ego.sensor_height])
    objects = []
    offset = 0
    for i in _visible(scenario, t):
        obj = scenario.objects[i]
        n = scenario.point_count(obj)
        centre = obj.centre_at(t) - shift
        objects.append(
            GroundTruthObject(
                object_id=i,
                centroid=tuple(float(c) for c in centre),
                point_indices=tuple(range(offset, offset + n)),
            )
        )
        offset += n
    return GroundTruth(frame=k, objects=tuple(objects))


def generate_synthetic(
    scenario: SyntheticScenario,
) -> Iterator[Tuple[SensorFrame, GroundTruth]]:
    """
    Emit ``(SensorFrame, GroundTruth)`` for every frame of ``scenario``.

    Per frame, visible objects are sampled first (in declaration order), then
    the ground; ground-truth point indices refer to the emitted cloud.
    """
    rng = np.random.default_rng(scenario.seed)
    origin = GpsFix(*scenario.origin)
    body_to_world = Rotation.from_euler("z", scenario.ego.yaw)
    world_to_body = body_to_world.inv()
    ego_velocity = (scenario.ego.velocity[0], scenario.ego.velocity[1], 0.0)

    for k in range(scenario.frames):
        t = k / scenario.rate_hz
        sensor = scenario.ego.sensor_at(t)
        truth = frame_truth(scenario, k)

        chunks = []
        intensities = []
        for gt in truth.objects:
            obj = scenario.objects[gt.object_id]
            n = len(gt.point_indices)
            local = _SAMPLERS[obj.shape](rng, np.asarray(obj.size), n)
            chunks.append(local + obj.centre_at(t))
            intensities.append(np.full(n, OBJECT_INTENSITY))

        g = scenario.ground
        ground_xy = rng.uniform(-g.extent, g.extent, size=(g.points, 2)) + sensor[:2]
        ground_z = rng.normal(0.0, g.noise_sigma, size=g.points)
        chunks.append(np.column_stack([ground_xy, ground_z]))
        intensities.append(np.full(g.points, GROUND_INTENSITY))

        world = np.vstack(chunks)
        body = world_to_body.apply(world - sensor)
        cloud = PointCloud(body, np.concatenate(intensities), Frame.SENSOR, t)

        frame = SensorFrame(
            index=k,
            timestamp=t,
            cloud=cloud,
            imu=ImuSample(accel=(0.0, 0.0, GRAVITY), gyro=(0.0, 0.0, 0.0)),
            gps=local_to_gps(sensor[0], sensor[1], origin, alt=origin.alt),
            velocity=ego_velocity,
            orientation=(0.0, 0.0, scenario.ego.yaw),
        )
        yield frame, truth


class SyntheticSource(FrameSource):
    """Frame source over a synthetic scenario."""

    name = "synthetic"

    def __init__(self, scenario: SyntheticScenario, max_frames: Optional[int] = None):
        if max_frames is not None:
            scenario = scenario.with_overrides(frames=min(max_frames, scenario.frames))
        self.scenario = scenario

    def frames(self) -> Iterator[SensorFrame]:
        for frame, _ in generate_synthetic(self.scenario):
            yield frame

    def ground_truth(self) -> List[GroundTruth]:
        return [frame_truth(self.scenario, k) for k in range(self.scenario.frames)]


def materialize_scenario(scenario: SyntheticScenario, out_dir: str | Path) -> Path:
    """
    Write ``scenario`` to disk in KITTI raw layout plus ``ground_truth.jsonl``.

    Returns:
        the drive directory, readable by ``KittiRawSource``
    """
    out = Path(out_dir)
    velo_dir = out / "velodyne_points" / "data"
    oxts_dir = out / "oxts" / "data"
    try:
        velo_dir.mkdir(parents=True, exist_ok=True)
        oxts_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetError(f"Cannot create drive directory {out}: {e}")

    stamps = []
    truths = []
    for frame, truth in generate_synthetic(scenario):
        name = f"{frame.index:010d}"
        write_velodyne_bin(velo_dir / f"{name}.bin", frame.cloud)
        write_oxts(
            oxts_dir / f"{name}.txt",
            frame.gps,
            frame.orientation,
            frame.velocity,
            frame.imu,
        )
        stamps.append(frame.timestamp)
        truths.append(truth)

    write_timestamps(out / "velodyne_points" / "timestamps.txt", stamps)
    write_timestamps(out / "oxts" / "timestamps.txt", stamps)
    write_ground_truth(out / "ground_truth.jsonl", truths)
    with open(out / "scenario.yaml", "w") as f:
        yaml.safe_dump(scenario.to_dict(), f, sort_keys=False)
    logger.info(f"Materialized {len(stamps)} frames of '{scenario.name}' to {out}")
    return out
