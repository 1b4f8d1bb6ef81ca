# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Frame-to-frame data association.

For every live track, current clusters are gated by the χ² distance between
descriptors, survivors are ranked by the maximum deviation test over their
CDFs, and near-ties are broken by the track's motion model. Tracks are
resolved greedily in descending confidence; a claimed cluster is unavailable
to later tracks.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .descriptor import VfhDescriptor, chi_squared_distance
from .exceptions import ContractViolationError, MotionModelUnavailable
from .segmentation import ObjectCluster
from .tracker import MotionConfig, MotionState, Track, motion_log_likelihood
from .utils.config_utils import require

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssociationConfig:
    """
    Attributes:
        chi2_gate: largest χ² distance a candidate may have, in (0, 2]
        mdt_tie_epsilon: MDT scores closer than this to the best are tied
        min_frames_for_motion: matched observations before the motion
            likelihood may break ties
        max_match_distance: optional metres from the predicted centroid
            beyond which clusters are not considered; None disables it
    """

    chi2_gate: float = 0.5
    mdt_tie_epsilon: float = 0.02
    min_frames_for_motion: int = 3
    max_match_distance: Optional[float] = None

    def __post_init__(self):
        require(0 < self.chi2_gate <= 2, f"chi2_gate must lie in (0, 2], got {self.chi2_gate}")
        require(self.mdt_tie_epsilon >= 0, "mdt_tie_epsilon must be >= 0")
        require(self.min_frames_for_motion >= 1, "min_frames_for_motion must be >= 1")
        require(
            self.max_match_distance is None or self.max_match_distance > 0,
            "max_match_distance must be > 0 or null",
        )


@dataclass(frozen=True)
class Candidate:
    cluster_id: int
    chi2: float
    mdt: float
    motion_ll: Optional[float] = None


@dataclass(frozen=True)
class CandidateSet:
    track_id: int
    candidates: tuple = ()

    def __len__(self) -> int:
        return len(self.candidates)

    def without(self, claimed: set) -> "CandidateSet":
        return CandidateSet(
            self.track_id, tuple(c for c in self.candidates if c.cluster_id not in claimed)
        )


class Decision(NamedTuple):
    cluster_id: Optional[int]
    reason: str
    candidates: tuple = ()


@dataclass
class AssociationResult:
    matches: Dict[int, int] = field(default_factory=dict)
    unmatched_tracks: List[int] = field(default_factory=list)
    unmatched_clusters: List[int] = field(default_factory=list)
    trace: List[Dict] = field(default_factory=list)


def _cdf(f: VfhDescriptor | Sequence[float] | np.ndarray) -> np.ndarray:
    return f.cdf if isinstance(f, VfhDescriptor) else np.asarray(f, dtype=np.float64)


def mdt_score(
    f1: VfhDescriptor | Sequence[float] | np.ndarray,
    f2: VfhDescriptor | Sequence[float] | np.ndarray,
) -> float:
    """
    Maximum deviation test similarity, ``1 − max |F1 − F2|``.

    Descriptors contribute their CDF; plain arrays are taken as CDFs.

    Raises:
        ContractViolationError: if the CDF lengths differ
    """
    a, b = _cdf(f1), _cdf(f2)
    if a.shape != b.shape:
        raise ContractViolationError(f"CDF lengths differ: {a.shape} vs {b.shape}")
    return float(1.0 - np.max(np.abs(a - b)))


def gate(
    descriptor: VfhDescriptor,
    frame_clusters: Mapping[int, VfhDescriptor],
    cfg: AssociationConfig = AssociationConfig(),
    track_id: int = -1,
) -> CandidateSet:
    """Keep the clusters within ``chi2_gate`` of ``descriptor``, in cluster-id order."""
    candidates = []
    for cluster_id in sorted(frame_clusters):
        other = frame_clusters[cluster_id]
        chi2 = chi_squared_distance(descriptor, other)
        if chi2 <= cfg.chi2_gate:
            candidates.append(Candidate(cluster_id, chi2, mdt_score(descriptor, other)))
    return CandidateSet(track_id, tuple(candidates))


def resolve(
    track: Track,
    candidates: CandidateSet,
    centroids: Mapping[int, np.ndarray],
    prediction: MotionState,
    dt: float,
    cfg: AssociationConfig = AssociationConfig(),
    motion: MotionConfig = MotionConfig(),
) -> Decision:
    """
    Pick at most one candidate for ``track``.

    The highest MDT score wins. Candidates within ``mdt_tie_epsilon`` of the
    best are tied; the tie goes to the highest motion log-likelihood once the
    track has ``min_frames_for_motion`` observations, and to the candidate
    nearest the predicted centroid before that. Remaining ties go to the
    lowest cluster id.

    Returns:
        ``Decision`` whose ``reason`` is one of ``none``, ``single``, ``mdt``,
        ``motion`` or ``nearest``
    """
    ranked = sorted(candidates.candidates, key=lambda c: (-c.mdt, c.cluster_id))
    if not ranked:
        return Decision(None, "none")
    if len(ranked) == 1:
        return Decision(ranked[0].cluster_id, "single", tuple(ranked))

    best = ranked[0].mdt
    tied = ranked[:1] + [c for c in ranked[1:] if best - c.mdt < cfg.mdt_tie_epsilon]
    if len(tied) == 1:
        return Decision(tied[0].cluster_id, "mdt", tuple(ranked))

    try:
        scored = [
            Candidate(
                c.cluster_id,
                c.chi2,
                c.mdt,
                motion_log_likelihood(
                    track, centroids[c.cluster_id], dt, motion, cfg.min_frames_for_motion
                ),
            )
            for c in tied
        ]
    except MotionModelUnavailable:
        predicted = prediction.position
        nearest = min(
            tied,
            key=lambda c: (
                float(np.linalg.norm(np.asarray(centroids[c.cluster_id]) - predicted)),
                c.cluster_id,
            ),
        )
        return Decision(nearest.cluster_id, "nearest", tuple(ranked))

    chosen = min(scored, key=lambda c: (-c.motion_ll, c.cluster_id))
    by_id = {c.cluster_id: c for c in scored}
    return Decision(
        chosen.cluster_id, "motion", tuple(by_id.get(c.cluster_id, c) for c in ranked)
    )


def associate_frame(
    tracks: Sequence[Track],
    clusters: Mapping[int, ObjectCluster],
    descriptors: Mapping[int, VfhDescriptor],
    predictions: Mapping[int, MotionState],
    timestamp: float,
    cfg: AssociationConfig = AssociationConfig(),
    motion: MotionConfig = MotionConfig(),
) -> AssociationResult:
    """
    Associate every track with at most one cluster of the current frame.

    Args:
        tracks: live tracks from the previous frame
        clusters: current clusters keyed by cluster id
        descriptors: descriptor of every cluster in ``clusters``
        predictions: each track's motion predicted to ``timestamp``
        timestamp: current frame time
        cfg: gating and tie-break settings
        motion: track motion noise model

    Returns:
        ``AssociationResult`` with an injective track to cluster mapping and
        one trace record per track
    """
    missing = set(clusters) - set(descriptors)
    if missing:
        raise ContractViolationError(f"Clusters without descriptors: {sorted(missing)}")

    result = AssociationResult()
    claimed: set = set()
    centroids = {k: c.centroid for k, c in clusters.items()}

    for track in sorted(tracks, key=lambda t: (-t.confidence, t.id)):
        prediction = predictions[track.id]
        available = {k: d for k, d in descriptors.items() if k not in claimed}
        if cfg.max_match_distance is not None:
            available = {
                k: d
                for k, d in available.items()
                if np.linalg.norm(centroids[k] - prediction.position) <= cfg.max_match_distance
            }
        candidates = gate(track.descriptor, available, cfg, track.id)
        decision = resolve(
            track,
            candidates,
            centroids,
            prediction,
            timestamp - track.last_time,
            cfg,
            motion,
        )
        if decision.cluster_id is None:
            result.unmatched_tracks.append(track.id)
        else:
            result.matches[track.id] = decision.cluster_id
            claimed.add(decision.cluster_id)
        result.trace.append(
            {
                "track": track.id,
                "candidates": [
                    {
                        "cluster": c.cluster_id,
                        "chi2": round(c.chi2, 6),
                        "mdt": round(c.mdt, 6),
                        "motion_ll": None if c.motion_ll is None else round(c.motion_ll, 6),
                    }
                    for c in (decision.candidates or candidates.candidates)
                ],
                "chosen": decision.cluster_id,
                "reason": decision.reason,
            }
        )

    result.unmatched_clusters = sorted(k for k in clusters if k not in claimed)
    logger.debug(
        f"Association: {len(result.matches)} matched, {len(result.unmatched_tracks)} missed, "
        f"{len(result.unmatched_clusters)} new"
    )
    return result
