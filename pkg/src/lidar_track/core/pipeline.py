# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
End-to-end tracking pipeline.

Per frame: ego pose, range/voxel filtering and ground removal in the sensor
frame, transform to the world frame, DBSCAN, descriptors, association, track
lifecycle, occupancy update and the scheduled super frame. Every artifact is
written under the configured output directory.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np

from ..datasets.kitti.adapter import KittiRawSource
from ..datasets.synthetic.generator import SyntheticSource, load_scenario
from .association import associate_frame
from .config import PipelineConfig
from .datasets import FrameSource, SensorFrame
from .descriptor import describe
from .evaluation import AccuracyReport, FrameTimings, score_accuracy
from .exceptions import DatasetError, DegenerateInputError, PipelineAbort
from .geometry import RigidTransform, pose_to_transform
from .occupancy import (
    OccupancyMap,
    SuperFrame,
    emit_superframe,
    superframe_due,
    update_occupancy,
    write_superframe,
)
from .pose_strategies import create_pose_strategy, oxts_pose, translation_error
from .preprocess import filter_cloud, remove_ground, to_world
from .segmentation import build_kdtree, dbscan
from .tracker import FrameUpdate, TrackManager
from .utils.format_utils import JsonLinesWriter, write_json_lines
from .utils.logging import StageClock, get_logger
from .utils.summary_utils import create_and_display_summary, quartiles

logger = logging.getLogger(__name__)

DECIMALS = 6


def build_source(cfg: PipelineConfig) -> FrameSource:
    """
    Frame source named by the config; the run seed drives synthetic scenes.

    Raises:
        ConfigError: on an unknown scenario
        DatasetError: if a KITTI drive is unusable
    """
    source = cfg.source
    if source.type == "kitti":
        return KittiRawSource(source.path, max_frames=source.max_frames)
    scenario = load_scenario(source.scenario).with_overrides(seed=cfg.rng_seed)
    return SyntheticSource(scenario, max_frames=source.max_frames)


def _r(value: float) -> float:
    return round(float(value), DECIMALS)


@dataclass
class FrameOutput:
    frame: int
    timestamp: float
    update: FrameUpdate
    track_records: List[Dict]
    pose_record: Dict
    timings: FrameTimings
    trace: List[Dict] = field(default_factory=list)
    descriptors: List[Dict] = field(default_factory=list)
    superframe: Optional[SuperFrame] = None


@dataclass
class PipelineResult:
    output_dir: Path
    frames: int
    track_records: List[Dict]
    pose_errors: List[float]
    timings: List[FrameTimings]
    superframes: List[SuperFrame]
    accuracy: Optional[AccuracyReport] = None


class TrackingPipeline:
    """
    Stateful frame processor; one instance per run.

    Args:
        cfg: validated pipeline config
        extrinsic: sensor-to-body transform of the source
    """

    def __init__(self, cfg: PipelineConfig, extrinsic: Optional[RigidTransform] = None):
        self.cfg = cfg
        self.extrinsic = extrinsic or RigidTransform.identity()
        self.pose_strategy = create_pose_strategy(cfg.pose.mode, cfg.pose.ekf)
        self.tracks = TrackManager(motion=cfg.motion, decay=cfg.decay)
        self.occupancy = OccupancyMap(cfg.occupancy)
        self.manager = get_logger()

    def _ransac_seed(self, frame_index: int) -> int:
        seq = np.random.SeedSequence([self.cfg.rng_seed, self.cfg.ransac.rng_seed, frame_index])
        return int(seq.generate_state(1)[0])

    def process_frame(self, frame: SensorFrame) -> FrameOutput:
        cfg = self.cfg
        clock = StageClock(self.manager)

        with clock.stage("pose"):
            pose = self.pose_strategy.update(frame)
        reference = oxts_pose(frame, self.pose_strategy.origin)

        with clock.stage("filtering"):
            filtered = filter_cloud(frame.cloud, cfg.filter)
            nonground = filtered
            if len(filtered) >= 3:
                ransac = replace(cfg.ransac, rng_seed=self._ransac_seed(frame.index))
                try:
                    nonground = remove_ground(filtered, ransac).nonground
                except DegenerateInputError as e:
                    logger.warning(f"Frame {frame.index}: ground removal skipped: {e}")

        with clock.stage("transform"):
            world = to_world(nonground, pose, self.extrinsic)
            viewpoint = pose_to_transform(pose).compose(self.extrinsic).translation

        with clock.stage("clustering"):
            result = dbscan(world, build_kdtree(world), cfg.dbscan)

        with clock.stage("descriptor_association"):
            clusters = {c.cluster_id: c for c in result.clusters if c.count >= 3}
            descriptors = {
                k: describe(c.xyz, viewpoint, cfg.descriptor) for k, c in clusters.items()
            }
            live = self.tracks.active()
            association = associate_frame(
                live,
                clusters,
                descriptors,
                self.tracks.predictions(frame.timestamp),
                frame.timestamp,
                cfg.association,
                cfg.motion,
            )
            update = self.tracks.advance(
                frame.timestamp, association.matches, clusters, descriptors
            )

        live = self.tracks.active()
        update_occupancy(
            self.occupancy, live, clusters, association.matches, frame.index, viewpoint
        )
        superframe = None
        if superframe_due(frame.index, cfg.superframe):
            superframe = emit_superframe(
                live, self.occupancy, frame.index, frame.timestamp, cfg.decay.high_confidence
            )

        timings = FrameTimings(frame=frame.index, total=clock.total_ms(), **clock.elapsed_ms)
        return FrameOutput(
            frame=frame.index,
            timestamp=frame.timestamp,
            update=update,
            track_records=self._track_records(frame, update),
            pose_record=self._pose_record(frame, pose, translation_error(pose, reference)),
            timings=timings,
            trace=[{"frame": frame.index, **t} for t in association.trace],
            descriptors=[
                {
                    "frame": frame.index,
                    "cluster": k,
                    "points": clusters[k].count,
                    "centroid": [_r(v) for v in clusters[k].centroid],
                    "pdf": [_r(v) for v in descriptors[k].pdf],
                }
                for k in sorted(descriptors)
            ],
            superframe=superframe,
        )

    def _track_records(self, frame: SensorFrame, update: FrameUpdate) -> List[Dict]:
        status = {i: "matched" for i in update.matched}
        status.update({i: "missed" for i in update.missed})
        status.update({i: "new" for i in update.born})
        records = []
        for track in self.tracks.active():
            m = track.motion
            x, y, z, vx, vy, theta = m.mean
            records.append(
                {
                    "frame": frame.index,
                    "timestamp": _r(frame.timestamp),
                    "track": track.id,
                    "x": _r(x),
                    "y": _r(y),
                    "z": _r(z),
                    "vx": _r(vx),
                    "vy": _r(vy),
                    "theta": _r(theta),
                    "speed": _r(m.speed),
                    "a_t": _r(m.a_t),
                    "a_n": _r(m.a_n),
                    "confidence": _r(track.confidence),
                    "matched": status.get(track.id) == "matched",
                    "status": status.get(track.id, "missed"),
                }
            )
        return records

    @staticmethod
    def _pose_record(frame: SensorFrame, pose, error: float) -> Dict:
        roll, pitch, yaw = pose.euler()
        x, y, z = pose.position
        return {
            "frame": frame.index,
            "timestamp": _r(frame.timestamp),
            "x": _r(x),
            "y": _r(y),
            "z": _r(z),
            "roll": _r(roll),
            "pitch": _r(pitch),
            "yaw": _r(yaw),
            "translation_error": _r(error),
        }


def _frames(source: FrameSource) -> Iterator[SensorFrame]:
    """Source frames; a read failure becomes ``PipelineAbort`` at that index."""
    iterator = iter(source)
    index = 0
    while True:
        try:
            frame = next(iterator)
        except StopIteration:
            return
        except (DatasetError, OSError) as e:
            raise PipelineAbort(str(e), index)
        yield frame
        index += 1


def run_pipeline(
    cfg: PipelineConfig, source: Optional[FrameSource] = None
) -> PipelineResult:
    """
    Run the pipeline over every frame of the configured source.

    Args:
        cfg: pipeline config; ``output.directory`` receives the artifacts
        source: optional source overriding ``cfg.source``

    Returns:
        ``PipelineResult`` with the in-memory copies of the written logs

    Raises:
        ConfigError: on invalid source settings
        DatasetError: if the source cannot be opened
        PipelineAbort: if a frame cannot be read or processed
    """
    manager = get_logger()
    source = source or build_source(cfg)
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)

    summary = create_and_display_summary(cfg)
    pipeline = TrackingPipeline(cfg, getattr(source, "extrinsic", None))

    track_records: List[Dict] = []
    pose_errors: List[float] = []
    timings: List[FrameTimings] = []
    superframes: List[SuperFrame] = []

    writers = {
        "tracks": JsonLinesWriter(out / "tracks.log"),
        "poses": JsonLinesWriter(out / "poses.log"),
        "timings": JsonLinesWriter(out / "timings.log"),
    }
    if cfg.output.association_trace:
        writers["association"] = JsonLinesWriter(out / "association.log")
    if cfg.output.descriptor_dump:
        writers["descriptors"] = JsonLinesWriter(out / "descriptors.log")

    try:
        with manager.phase("run"):
            for frame in _frames(source):
                try:
                    output = pipeline.process_frame(frame)
                except PipelineAbort:
                    raise
                except Exception as e:
                    raise PipelineAbort(f"{type(e).__name__}: {e}", frame.index) from e

                writers["tracks"].write_all(output.track_records)
                writers["poses"].write(output.pose_record)
                writers["timings"].write(output.timings.to_record())
                if "association" in writers:
                    writers["association"].write_all(output.trace)
                if "descriptors" in writers:
                    writers["descriptors"].write_all(output.descriptors)
                if output.superframe is not None:
                    write_superframe(output.superframe, out)
                    superframes.append(output.superframe)

                track_records.extend(output.track_records)
                pose_errors.append(output.pose_record["translation_error"])
                timings.append(output.timings)
                if frame.index % 10 == 0:
                    manager.progress(
                        f"Frame {frame.index}: {len(output.track_records)} tracks, "
                        f"{len(output.update.born)} new, {len(output.update.removed)} removed"
                    )
    finally:
        for writer in writers.values():
            writer.close()

    accuracy = None
    truth = [g for g in source.ground_truth() or [] if g.frame < len(timings)]
    if any(g.objects for g in truth):
        accuracy = score_accuracy(track_records, truth, cfg.evaluation.match_radius)
        write_json_lines(out / "accuracy.log", accuracy.records())
        manager.progress(accuracy.to_pretty())
        manager.log_metric("accuracy_median", accuracy.median)

    summary.results = {
        "frames": len(timings),
        "tracks_created": pipeline.tracks.allocator.issued,
        "superframes": len(superframes),
        "pose_translation_error": quartiles(pose_errors),
    }
    if accuracy is not None:
        summary.results["accuracy"] = accuracy.summary()
    (out / "run_summary.json").write_text(summary.to_json() + "\n")
    manager.log_metric("frames", len(timings))

    return PipelineResult(
        output_dir=out,
        frames=len(timings),
        track_records=track_records,
        pose_errors=pose_errors,
        timings=timings,
        superframes=superframes,
        accuracy=accuracy,
    )
