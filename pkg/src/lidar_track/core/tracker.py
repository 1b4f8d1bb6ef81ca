# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Track lifecycle and per-object motion estimation.

Each track carries a constant-velocity EKF over ``[X, Y, Z, Vx, Vy, θ]``.
Only the centroid position is measured; velocity becomes observable through
successive positions and the heading is derived from velocity. Speed and the
tangential/normal acceleration split are finite-difference diagnostics over
the matched-centroid history, not filter state.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.stats import multivariate_normal

from .descriptor import VfhDescriptor
from .exceptions import (
    ContractViolationError,
    MotionModelUnavailable,
    NumericallyDegenerateError,
)
from .geometry import wrap_angle
from .segmentation import ObjectCluster
from .utils.config_utils import require

logger = logging.getLogger(__name__)

STATE_DIM = 6
MEASUREMENT = np.hstack([np.eye(3), np.zeros((3, 3))])
# centroids kept per track; enough for the three-point diagnostics
HISTORY_LEN = 3


@dataclass(frozen=True)
class MotionConfig:
    """Noise model of the per-track filter (standard deviations and densities)."""

    measurement_sigma: float = 0.1
    position_process_noise: float = 0.01
    velocity_process_noise: float = 0.5
    heading_process_noise: float = 0.1
    initial_velocity_variance: float = 4.0
    heading_speed_threshold: float = 0.1

    def __post_init__(self):
        require(self.measurement_sigma > 0, "measurement_sigma must be > 0")
        require(
            min(
                self.position_process_noise,
                self.velocity_process_noise,
                self.heading_process_noise,
            )
            > 0,
            "process noise densities must be > 0",
        )
        require(self.initial_velocity_variance > 0, "initial_velocity_variance must be > 0")

    def process_noise(self, dt: float) -> np.ndarray:
        q = self.position_process_noise
        return np.diag(
            [q, q, q, self.velocity_process_noise, self.velocity_process_noise,
             self.heading_process_noise]
        ) * dt  # fmt: skip

    def initial_covariance(self) -> np.ndarray:
        r = self.measurement_sigma**2
        v = self.initial_velocity_variance
        return np.diag([r, r, r, v, v, math.pi**2])


@dataclass(frozen=True)
class DecayConfig:
    decay_lambda: float = 0.7
    match_gain: float = 0.15
    initial_confidence: float = 0.5
    discard_threshold: float = 0.2
    high_confidence: float = 0.8

    def __post_init__(self):
        require(0 < self.decay_lambda < 1, "decay_lambda must lie in (0, 1)")
        require(self.match_gain >= 0, "match_gain must be >= 0")
        require(
            0 < self.discard_threshold < self.initial_confidence <= 1,
            "need 0 < discard_threshold < initial_confidence <= 1",
        )
        require(0 < self.high_confidence <= 1, "high_confidence must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class MotionState:
    """
    Filter mean ``[X, Y, Z, Vx, Vy, θ]`` and covariance, plus diagnostics.

    ``speed`` is the latest finite-difference speed; ``a_t`` and ``a_n`` split
    the acceleration magnitude ``a`` into tangential and normal parts with
    ``a_n² + a_t² = a²``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    speed: float = 0.0
    a_t: float = 0.0
    a_n: float = 0.0
    a: float = 0.0

    def __post_init__(self):
        for name in ("mean", "covariance"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[3:5]

    @property
    def heading(self) -> float:
        return float(self.mean[5])


@dataclass(frozen=True, eq=False)
class Track:
    id: int
    motion: MotionState
    descriptor: VfhDescriptor
    confidence: float
    last_time: float
    age: int = 1
    frames_since_match: int = 0
    observations: int = 1
    history: Tuple[Tuple[float, Tuple[float, float, float]], ...] = ()
    bbox_min: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    bbox_max: Tuple[float, float, float] = (0.0, 0.0, 0.0)


class TrackIdAllocator:
    """Monotonic per-run track ids; never reuses an id."""

    def __init__(self, start: int = 0):
        self._next = start

    def allocate(self) -> int:
        track_id = self._next
        self._next += 1
        return track_id

    @property
    def issued(self) -> int:
        return self._next


def _as_tuple(v: Sequence[float]) -> Tuple[float, float, float]:
    return (float(v[0]), float(v[1]), float(v[2]))


def _extend(history, timestamp: float, centroid: Sequence[float]):
    return (history + ((float(timestamp), _as_tuple(centroid)),))[-HISTORY_LEN:]


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p.T)


def init_track(
    cluster: ObjectCluster,
    descriptor: VfhDescriptor,
    timestamp: float,
    allocator: TrackIdAllocator,
    decay: DecayConfig = DecayConfig(),
    motion: MotionConfig = MotionConfig(),
) -> Track:
    """Start a track at the cluster centroid with zero velocity and heading."""
    mean = np.zeros(STATE_DIM)
    mean[:3] = cluster.centroid
    track = Track(
        id=allocator.allocate(),
        motion=MotionState(mean, motion.initial_covariance()),
        descriptor=descriptor,
        confidence=decay.initial_confidence,
        last_time=float(timestamp),
        history=((float(timestamp), _as_tuple(cluster.centroid)),),
        bbox_min=_as_tuple(cluster.bbox_min),
        bbox_max=_as_tuple(cluster.bbox_max),
    )
    logger.debug(f"Track {track.id} born at {np.round(cluster.centroid, 3).tolist()}")
    return track


def predict_motion(
    track: Track, dt: float, cfg: MotionConfig = MotionConfig()
) -> MotionState:
    """Constant-velocity prediction; Z and θ are held."""
    if not dt > 0:
        raise ContractViolationError(f"dt must be > 0, got {dt}")
    f = np.eye(STATE_DIM)
    f[0, 3] = dt
    f[1, 4] = dt
    mean = f @ track.motion.mean
    cov = _symmetrize(f @ track.motion.covariance @ f.T + cfg.process_noise(dt))
    return replace(track.motion, mean=mean, covariance=cov)


def _diagnostics(
    history: Sequence[Tuple[float, Tuple[float, float, float]]],
) -> Tuple[float, float, float, float]:
    """Speed and acceleration split from the last three matched centroids (xy)."""
    if len(history) < 2:
        return 0.0, 0.0, 0.0, 0.0
    (t1, c1), (t2, c2) = history[-2], history[-1]
    v_now = (np.asarray(c2[:2]) - np.asarray(c1[:2])) / (t2 - t1)
    speed = float(np.linalg.norm(v_now))
    if len(history) < 3:
        return speed, 0.0, 0.0, 0.0
    t0, c0 = history[-3]
    v_prev = (np.asarray(c1[:2]) - np.asarray(c0[:2])) / (t1 - t0)
    dt = t2 - t1
    a_t = (speed - float(np.linalg.norm(v_prev))) / dt
    a = float(np.linalg.norm(v_now - v_prev)) / dt
    a_n = math.sqrt(max(0.0, a * a - a_t * a_t))
    return speed, a_t, a_n, a


def update_motion(
    track: Track,
    centroid: Sequence[float],
    dt: float,
    cfg: MotionConfig = MotionConfig(),
) -> MotionState:
    """
    Predict by ``dt`` then fuse a matched centroid.

    The covariance update uses the Joseph form and is re-symmetrized. The
    heading follows the velocity once speed exceeds the configured threshold
    and is held otherwise.

    Raises:
        ContractViolationError: if ``dt <= 0``
        NumericallyDegenerateError: if the innovation covariance is singular
    """
    predicted = predict_motion(track, dt, cfg)
    x = predicted.mean
    p = predicted.covariance
    z = np.asarray(centroid, dtype=np.float64).reshape(3)

    h = MEASUREMENT
    r = np.eye(3) * cfg.measurement_sigma**2
    s = h @ p @ h.T + r
    try:
        factor = cho_factor(s)
    except LinAlgError as e:
        raise NumericallyDegenerateError(f"Track {track.id}: singular innovation: {e}")
    gain = cho_solve(factor, h @ p).T
    innovation = z - h @ x
    mean = x + gain @ innovation
    joseph = np.eye(STATE_DIM) - gain @ h
    cov = _symmetrize(joseph @ p @ joseph.T + gain @ r @ gain.T)

    speed_filter = math.hypot(mean[3], mean[4])
    if speed_filter > cfg.heading_speed_threshold:
        mean[5] = wrap_angle(math.atan2(mean[4], mean[3]))
    else:
        mean[5] = track.motion.mean[5]

    history = _extend(track.history, track.last_time + dt, z)
    speed, a_t, a_n, a = _diagnostics(history)
    return MotionState(mean, cov, speed=speed, a_t=a_t, a_n=a_n, a=a)


def motion_log_likelihood(
    track: Track,
    centroid: Sequence[float],
    dt: float,
    cfg: MotionConfig = MotionConfig(),
    min_frames: int = 3,
) -> float:
    """
    Gaussian log-density of ``centroid`` under the track's predicted position.

    Raises:
        MotionModelUnavailable: while the track has fewer than ``min_frames``
            matched observations
    """
    if track.observations < min_frames:
        raise MotionModelUnavailable(
            f"Track {track.id} has {track.observations} observations, needs {min_frames}"
        )
    predicted = predict_motion(track, dt, cfg)
    return float(
        multivariate_normal.logpdf(
            np.asarray(centroid, dtype=np.float64),
            mean=predicted.mean[:3],
            cov=predicted.covariance[:3, :3],
        )
    )


def apply_decay(track: Track, matched: bool, cfg: DecayConfig = DecayConfig()) -> Track:
    if matched:
        return replace(
            track,
            confidence=min(1.0, track.confidence + cfg.match_gain),
            frames_since_match=0,
        )
    return replace(
        track,
        confidence=track.confidence * cfg.decay_lambda,
        frames_since_match=track.frames_since_match + 1,
    )


def prune(tracks: Sequence[Track], cfg: DecayConfig = DecayConfig()) -> List[Track]:
    """Drop tracks whose confidence fell strictly below the discard threshold."""
    kept = []
    for track in tracks:
        if track.confidence < cfg.discard_threshold:
            x, y, z = track.motion.position
            logger.info(
                f"Track {track.id} removed: confidence {track.confidence:.4f}, "
                f"age {track.age}, last at ({x:.2f}, {y:.2f}, {z:.2f})"
            )
            continue
        kept.append(track)
    return kept


class FrameUpdate(NamedTuple):
    matched: List[int]
    missed: List[int]
    born: List[int]
    removed: List[int]


@dataclass
class TrackManager:
    """
    Owns the track store and id allocator of one run.

    ``advance`` applies one frame's association outcome: matched tracks are
    updated and gain confidence, unmatched ones coast on their prediction and
    decay, tracks under the discard threshold are pruned and every unmatched
    cluster starts a new track.
    """

    motion: MotionConfig = field(default_factory=MotionConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    allocator: TrackIdAllocator = field(default_factory=TrackIdAllocator)
    tracks: Dict[int, Track] = field(default_factory=dict)

    def active(self) -> List[Track]:
        return [self.tracks[k] for k in sorted(self.tracks)]

    def predictions(self, timestamp: float) -> Dict[int, MotionState]:
        return {
            t.id: predict_motion(t, timestamp - t.last_time, self.motion)
            for t in self.active()
        }

    def advance(
        self,
        timestamp: float,
        matches: Mapping[int, int],
        clusters: Mapping[int, ObjectCluster],
        descriptors: Mapping[int, VfhDescriptor],
    ) -> FrameUpdate:
        matched, missed = [], []
        updated: List[Track] = []
        for track in self.active():
            dt = timestamp - track.last_time
            cluster_id = matches.get(track.id)
            if cluster_id is not None:
                cluster = clusters[cluster_id]
                motion = update_motion(track, cluster.centroid, dt, self.motion)
                track = replace(
                    track,
                    motion=motion,
                    descriptor=descriptors[cluster_id],
                    last_time=timestamp,
                    age=track.age + 1,
                    observations=track.observations + 1,
                    history=_extend(track.history, timestamp, cluster.centroid),
                    bbox_min=_as_tuple(cluster.bbox_min),
                    bbox_max=_as_tuple(cluster.bbox_max),
                )
                track = apply_decay(track, True, self.decay)
                matched.append(track.id)
            else:
                track = replace(
                    track,
                    motion=predict_motion(track, dt, self.motion),
                    last_time=timestamp,
                    age=track.age + 1,
                )
                track = apply_decay(track, False, self.decay)
                missed.append(track.id)
            updated.append(track)

        survivors = prune(updated, self.decay)
        removed = sorted({t.id for t in updated} - {t.id for t in survivors})
        self.tracks = {t.id: t for t in survivors}

        claimed = set(matches.values())
        born = []
        for cluster_id in sorted(clusters):
            if cluster_id in claimed:
                continue
            track = init_track(
                clusters[cluster_id],
                descriptors[cluster_id],
                timestamp,
                self.allocator,
                self.decay,
                self.motion,
            )
            self.tracks[track.id] = track
            born.append(track.id)

        return FrameUpdate(matched, missed, born, removed)
