# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Evaluation of tracking runs.

This module scores identity preservation against ground truth, tabulates the
per-stage frame timings, sweeps seeds with a Student-t interval and measures
how DBSCAN time grows with cloud size.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .datasets import GroundTruth
from .exceptions import EvaluationError
from .geometry import Frame, PointCloud
from .segmentation import DbscanConfig, build_kdtree, dbscan

logger = logging.getLogger(__name__)

STAGES = ("filtering", "pose", "transform", "clustering", "descriptor_association")
STAGE_LABELS = {
    "filtering": "LiDAR Point Cloud Filtering",
    "pose": "Pose EKF",
    "transform": "Point Cloud Transformation",
    "clustering": "DBSCAN Clustering",
    "descriptor_association": "Frame-to-Frame Mapping",
}
METHODOLOGY_TOTAL = "Methodology Total"
MEASURED_TOTAL = "Measured Wall Total"


@dataclass
class FrameTimings:
    """Wall-clock milliseconds of one frame, per stage, plus the measured total."""

    frame: int
    filtering: float = 0.0
    pose: float = 0.0
    transform: float = 0.0
    clustering: float = 0.0
    descriptor_association: float = 0.0
    total: float = 0.0

    def stage_sum(self) -> float:
        return sum(getattr(self, s) for s in STAGES)

    def to_record(self) -> Dict:
        return {k: (round(v, 4) if isinstance(v, float) else v) for k, v in asdict(self).items()}


@dataclass
class FrameAccuracy:
    frame: int
    visible: int
    correct: int

    @property
    def rate(self) -> float:
        return self.correct / self.visible


@dataclass
class AccuracyReport:
    per_frame: List[FrameAccuracy]
    id_switches: int
    median: float
    q1: float
    q3: float
    min: float
    max: float
    mean: float

    @property
    def rates(self) -> List[float]:
        return [f.rate for f in self.per_frame]

    @property
    def visible(self) -> int:
        return sum(f.visible for f in self.per_frame)

    def summary(self) -> Dict:
        return {
            "frames": len(self.per_frame),
            "visible_object_frames": self.visible,
            "id_switches": self.id_switches,
            "median": round(self.median, 6),
            "q1": round(self.q1, 6),
            "q3": round(self.q3, 6),
            "min": round(self.min, 6),
            "max": round(self.max, 6),
            "mean": round(self.mean, 6),
        }

    def records(self) -> List[Dict]:
        rows = [
            {
                "frame": f.frame,
                "visible": f.visible,
                "correct": f.correct,
                "rate": round(f.rate, 6),
            }
            for f in self.per_frame
        ]
        return rows + [{"summary": self.summary()}]

    def to_pretty(self) -> str:
        pad = " " * 4
        return "\n".join(
            [
                "=== Tracking Accuracy ===",
                f"{pad}Frames scored   : {len(self.per_frame)} ({self.visible} object-frames)",
                f"{pad}Median          : {self.median:.2%}",
                f"{pad}IQR             : {self.q1:.2%} - {self.q3:.2%}",
                f"{pad}Min / Max       : {self.min:.2%} / {self.max:.2%}",
                f"{pad}ID switches     : {self.id_switches}",
            ]
        )


def _track_table(track_records) -> pd.DataFrame:
    table = pd.DataFrame(track_records)
    if table.empty:
        return pd.DataFrame(columns=["frame", "track", "x", "y", "z"])
    missing = {"frame", "track", "x", "y", "z"} - set(table.columns)
    if missing:
        raise EvaluationError(f"Track records lack columns: {sorted(missing)}")
    return table


def score_accuracy(
    track_records: Sequence[Dict] | pd.DataFrame,
    ground_truth: Sequence[GroundTruth],
    match_radius: float = 1.0,
) -> AccuracyReport:
    """
    Per-frame identity-preservation rate of the tracks against ground truth.

    A visible object is correctly tracked in a frame when the track id it was
    assigned before still lies within ``match_radius`` of it. Until an object
    has an id, any track within the radius counts as correct and the nearest
    one becomes its id. When the assigned track is no longer within the
    radius, the nearest track in range takes over and an identity switch is
    counted; with no track in range the object keeps its old id. Frames
    without visible objects are not scored.

    Args:
        track_records: rows with at least ``frame``, ``track``, ``x``, ``y``, ``z``
        ground_truth: per-frame visible objects with world centroids
        match_radius: metres

    Raises:
        EvaluationError: if there is no ground truth or no visible object
    """
    if not ground_truth:
        raise EvaluationError("Ground truth is empty")
    table = _track_table(track_records)
    by_frame = {int(k): g for k, g in table.groupby("frame")} if len(table) else {}

    assigned: Dict[int, int] = {}
    per_frame: List[FrameAccuracy] = []
    switches = 0
    for truth in sorted(ground_truth, key=lambda g: g.frame):
        if not truth.objects:
            continue
        rows = by_frame.get(truth.frame)
        if rows is not None:
            ids = rows["track"].to_numpy(dtype=np.int64)
            xyz = rows[["x", "y", "z"]].to_numpy(dtype=np.float64)
        else:
            ids = np.zeros(0, dtype=np.int64)
            xyz = np.zeros((0, 3))

        correct = 0
        for obj in truth.objects:
            dist = np.linalg.norm(xyz - np.asarray(obj.centroid), axis=1)
            in_range = dist <= match_radius
            previous = assigned.get(obj.object_id)
            if previous is not None and np.any(in_range & (ids == previous)):
                correct += 1
                continue
            if not in_range.any():
                continue
            order = np.lexsort((ids[in_range], dist[in_range]))
            nearest = int(ids[in_range][order[0]])
            if previous is None:
                correct += 1
            else:
                switches += 1
            assigned[obj.object_id] = nearest
        per_frame.append(FrameAccuracy(truth.frame, len(truth.objects), correct))

    if not per_frame:
        raise EvaluationError("Ground truth has no visible objects")
    rates = np.array([f.rate for f in per_frame])
    q1, median, q3 = np.percentile(rates, [25, 50, 75])
    return AccuracyReport(
        per_frame=per_frame,
        id_switches=switches,
        median=float(median),
        q1=float(q1),
        q3=float(q3),
        min=float(rates.min()),
        max=float(rates.max()),
        mean=float(rates.mean()),
    )


@dataclass
class TimingReport:
    table: pd.DataFrame
    frames: int

    def records(self) -> List[Dict]:
        return [
            {"stage": stage, "mean_ms": round(float(row.mean_ms), 4), "hz": round(float(row.hz), 4)}
            for stage, row in self.table.iterrows()
        ]

    def to_text(self) -> str:
        width = max(len(s) for s in self.table.index)
        lines = [f"{'Stage':<{width}}  {'Mean (ms)':>10}  {'Hz':>8}"]
        lines.append("-" * len(lines[0]))
        for stage, row in self.table.iterrows():
            lines.append(f"{stage:<{width}}  {row.mean_ms:>10.4f}  {row.hz:>8.2f}")
        lines.append(f"({self.frames} frames)")
        return "\n".join(lines)


def report_timings(timings: Sequence[FrameTimings] | pd.DataFrame) -> TimingReport:
    """
    Mean per-stage time, the sum of stage means and the measured frame total.

    Raises:
        EvaluationError: with no frames
    """
    if isinstance(timings, pd.DataFrame):
        frame = timings
    else:
        frame = pd.DataFrame([asdict(t) for t in timings])
    if frame.empty:
        raise EvaluationError("No frame timings to report")

    means = frame[list(STAGES)].mean()
    rows = {STAGE_LABELS[s]: float(means[s]) for s in STAGES}
    rows[METHODOLOGY_TOTAL] = float(means.sum())
    rows[MEASURED_TOTAL] = float(frame["total"].mean())
    table = pd.DataFrame({"mean_ms": pd.Series(rows)})
    table["hz"] = 1000.0 / table["mean_ms"]
    return TimingReport(table, len(frame))


@dataclass
class SeedSweep:
    seeds: List[int]
    medians: List[float]
    median_of_medians: float
    q1: float
    q3: float
    mean: float
    confidence_interval: Tuple[float, float]
    confidence_level: float = 0.95
    reports: List[AccuracyReport] = field(default_factory=list, repr=False)

    def summary(self) -> Dict:
        return {
            "seeds": self.seeds,
            "medians": [round(m, 6) for m in self.medians],
            "median_of_medians": round(self.median_of_medians, 6),
            "q1": round(self.q1, 6),
            "q3": round(self.q3, 6),
            "mean": round(self.mean, 6),
            "confidence_interval": [round(v, 6) for v in self.confidence_interval],
            "confidence_level": self.confidence_level,
        }


def evaluate_seeds(
    run: Callable[[int], AccuracyReport],
    seeds: Sequence[int],
    confidence_level: float = 0.95,
) -> SeedSweep:
    """Run ``run(seed)`` per seed and summarize the per-run median accuracies."""
    if not seeds:
        raise EvaluationError("No seeds to evaluate")
    reports = [run(seed) for seed in seeds]
    medians = np.array([r.median for r in reports])
    mean = float(medians.mean())
    sem = float(stats.sem(medians)) if len(medians) > 1 else 0.0
    if sem > 0:
        lo, hi = stats.t.interval(
            confidence=confidence_level, df=len(medians) - 1, loc=mean, scale=sem
        )
        interval = (float(lo), float(hi))
    else:
        interval = (mean, mean)
    q1, median, q3 = np.percentile(medians, [25, 50, 75])
    return SeedSweep(
        seeds=list(seeds),
        medians=medians.tolist(),
        median_of_medians=float(median),
        q1=float(q1),
        q3=float(q3),
        mean=mean,
        confidence_interval=interval,
        confidence_level=confidence_level,
        reports=reports,
    )


@dataclass
class ScalingResult:
    n: int
    seconds_n: float
    seconds_2n: float

    @property
    def factor(self) -> float:
        return self.seconds_2n / self.seconds_n if self.seconds_n > 0 else float("inf")


def _uniform_cloud(rng: np.random.Generator, n: int, density: float) -> PointCloud:
    side = (n / density) ** (1.0 / 3.0)
    return PointCloud(rng.uniform(0.0, side, size=(n, 3)), np.zeros(n), Frame.WORLD)


def _time_dbscan(cloud: PointCloud, cfg: DbscanConfig, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        dbscan(cloud, build_kdtree(cloud), cfg)
        best = min(best, time.perf_counter() - start)
    return best


def measure_dbscan_scaling(
    n: int,
    cfg: DbscanConfig = DbscanConfig(),
    density: float = 20.0,
    repeats: int = 3,
    seed: int = 0,
) -> ScalingResult:
    """
    Best-of-``repeats`` DBSCAN time on ``n`` and ``2n`` uniform points.

    Both clouds share ``density`` (points per m³) so the neighbourhood size,
    and therefore the per-point work, stays the same.
    """
    if n < 1:
        raise EvaluationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    small = _uniform_cloud(rng, n, density)
    large = _uniform_cloud(rng, 2 * n, density)
    result = ScalingResult(n, _time_dbscan(small, cfg, repeats), _time_dbscan(large, cfg, repeats))
    logger.info(f"DBSCAN n={n}: {result.seconds_n:.4f}s, 2n: {result.seconds_2n:.4f}s, x{result.factor:.2f}")
    return result
