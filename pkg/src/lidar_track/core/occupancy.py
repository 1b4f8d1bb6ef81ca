# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Log-odds voxel occupancy map and periodic super frames.

The map is a hash of fixed-leaf voxels keyed by integer index
``floor(p / leaf)``. Super frames snapshot the high-confidence tracks and
the occupied-voxel count at a fixed frame period.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .segmentation import ObjectCluster
from .tracker import Track
from .utils.config_utils import require
from .utils.format_utils import write_yaml

logger = logging.getLogger(__name__)

Voxel = Tuple[int, int, int]


@dataclass(frozen=True)
class OccupancyConfig:
    leaf: float = 0.2
    hit_log_odds: float = 0.85
    miss_log_odds: float = -0.4
    clamp: float = 4.0
    carve_free_space: bool = False

    def __post_init__(self):
        require(self.leaf > 0, "leaf must be > 0")
        require(self.hit_log_odds > 0, "hit_log_odds must be > 0")
        require(self.miss_log_odds < 0, "miss_log_odds must be < 0")
        require(self.clamp > 0, "clamp must be > 0")


@dataclass(frozen=True)
class SuperFrameConfig:
    period: int = 10

    def __post_init__(self):
        require(self.period >= 1, "period must be >= 1")


def voxel_of(point: Sequence[float], leaf: float) -> Voxel:
    i, j, k = np.floor(np.asarray(point, dtype=np.float64) / leaf).astype(np.int64)
    return (int(i), int(j), int(k))


@dataclass
class OccupancyMap:
    cfg: OccupancyConfig = field(default_factory=OccupancyConfig)
    log_odds: Dict[Voxel, float] = field(default_factory=dict)
    last_update: Dict[Voxel, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.log_odds)

    def _add(self, voxel: Voxel, delta: float, frame_index: int) -> None:
        value = self.log_odds.get(voxel, 0.0) + delta
        self.log_odds[voxel] = min(self.cfg.clamp, max(-self.cfg.clamp, value))
        self.last_update[voxel] = frame_index

    def update(
        self,
        points: np.ndarray,
        frame_index: int,
        origin: Optional[Sequence[float]] = None,
    ) -> int:
        """
        Integrate one frame of world-frame hit points.

        Every voxel holding at least one point gains ``hit_log_odds`` once.
        With ``carve_free_space`` and an ``origin``, voxels crossed by the
        origin-to-point rays (hit voxels excepted) gain ``miss_log_odds`` once.

        Returns:
            Number of distinct hit voxels
        """
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(pts) == 0:
            return 0
        hit_keys = np.unique(np.floor(pts / self.cfg.leaf).astype(np.int64), axis=0)
        hits = {tuple(int(v) for v in key) for key in hit_keys}

        if self.cfg.carve_free_space and origin is not None:
            for voxel in sorted(self._traversed(pts, np.asarray(origin, dtype=np.float64)) - hits):
                self._add(voxel, self.cfg.miss_log_odds, frame_index)
        for voxel in sorted(hits):
            self._add(voxel, self.cfg.hit_log_odds, frame_index)
        return len(hits)

    def _traversed(self, pts: np.ndarray, origin: np.ndarray) -> set:
        step = 0.5 * self.cfg.leaf
        free: set = set()
        for p in pts:
            length = float(np.linalg.norm(p - origin))
            n = int(math.ceil(length / step))
            if n < 2:
                continue
            samples = origin + np.outer(np.arange(n) / n, p - origin)
            keys = np.unique(np.floor(samples / self.cfg.leaf).astype(np.int64), axis=0)
            free.update(tuple(int(v) for v in key) for key in keys)
        return free

    def probability(self, voxel: Voxel) -> float:
        """Occupancy probability; unknown voxels are 0.5."""
        return 1.0 / (1.0 + math.exp(-self.log_odds.get(voxel, 0.0)))

    def occupied_voxels(self, min_log_odds: float = 0.0) -> List[Voxel]:
        return sorted(v for v, lo in self.log_odds.items() if lo > min_log_odds)


def update_occupancy(
    occupancy: OccupancyMap,
    tracks: Iterable[Track],
    clusters: Dict[int, ObjectCluster],
    matches: Dict[int, int],
    frame_index: int,
    origin: Optional[Sequence[float]] = None,
) -> OccupancyMap:
    """Register the points of every matched cluster of live tracks."""
    live = {t.id for t in tracks}
    matched = [clusters[c] for t, c in sorted(matches.items()) if t in live]
    if matched:
        occupancy.update(np.vstack([c.xyz for c in matched]), frame_index, origin)
    return occupancy


@dataclass(frozen=True)
class SuperFrame:
    frame: int
    timestamp: float
    tracks: Tuple[Dict, ...]
    occupied_voxels: int

    def to_dict(self) -> Dict:
        return {
            "frame": self.frame,
            "timestamp": round(self.timestamp, 6),
            "occupied_voxels": self.occupied_voxels,
            "tracks": list(self.tracks),
        }


def superframe_due(frame_index: int, cfg: SuperFrameConfig = SuperFrameConfig()) -> bool:
    return frame_index > 0 and frame_index % cfg.period == 0


def _track_entry(track: Track) -> Dict:
    return {
        "id": track.id,
        "centroid": [round(float(v), 6) for v in track.motion.position],
        "velocity": [round(float(v), 6) for v in track.motion.velocity],
        "confidence": round(track.confidence, 6),
        "bbox_min": [round(v, 6) for v in track.bbox_min],
        "bbox_max": [round(v, 6) for v in track.bbox_max],
    }


def emit_superframe(
    tracks: Iterable[Track],
    occupancy: OccupancyMap,
    frame_index: int,
    timestamp: float,
    high_confidence: float,
) -> SuperFrame:
    """Snapshot the tracks with ``confidence >= high_confidence``; may be empty."""
    selected = sorted(
        (t for t in tracks if t.confidence >= high_confidence), key=lambda t: t.id
    )
    return SuperFrame(
        frame=frame_index,
        timestamp=timestamp,
        tracks=tuple(_track_entry(t) for t in selected),
        occupied_voxels=len(occupancy.occupied_voxels()),
    )


def write_superframe(superframe: SuperFrame, out_dir: str | Path) -> Path:
    path = Path(out_dir) / "superframes" / f"superframe_{superframe.frame:06d}.yaml"
    write_yaml(path, superframe.to_dict())
    logger.debug(f"Super frame {superframe.frame}: {len(superframe.tracks)} tracks -> {path}")
    return path
