"""
Summary utilities for creating run summaries.

Keeps summary construction out of the pipeline so it can be tested on its
own and reused by the CLI.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .telemetry import RunSummary


def describe_source(cfg) -> str:
    source = cfg.source
    if source.type == "kitti":
        return f"kitti:{Path(source.path).name}"
    return f"synthetic:{Path(str(source.scenario)).stem}"


def create_run_summary(cfg) -> RunSummary:
    """
    Create the pre-run summary of a pipeline config.

    Args:
        cfg: a ``PipelineConfig``

    Returns:
        RunSummary with the thresholds that shape the run
    """
    params = {
        "voxel_leaf": cfg.filter.voxel_leaf,
        "ransac_threshold": cfg.ransac.distance_threshold,
        "dbscan_eps": cfg.dbscan.eps,
        "dbscan_min_pts": cfg.dbscan.min_pts,
        "chi2_gate": cfg.association.chi2_gate,
        "mdt_tie_epsilon": cfg.association.mdt_tie_epsilon,
        "max_match_distance": cfg.association.max_match_distance,
        "decay_lambda": cfg.decay.decay_lambda,
        "superframe_period": cfg.superframe.period,
    }
    return RunSummary(
        source=describe_source(cfg),
        frames=cfg.source.max_frames,
        pose_mode=cfg.pose.mode,
        rng_seed=cfg.rng_seed,
        output_dir=str(cfg.output.directory),
        params=params,
    )


def quartiles(values) -> Optional[Dict[str, float]]:
    if len(values) == 0:
        return None
    q1, median, q3 = np.percentile(np.asarray(values, dtype=np.float64), [25, 50, 75])
    return {"median": round(float(median), 6), "q1": round(float(q1), 6), "q3": round(float(q3), 6)}


def create_and_display_summary(cfg) -> RunSummary:
    """Create the summary and log it; never fails the run."""
    try:
        summary = create_run_summary(cfg)
        summary.log()
        return summary
    except Exception as e:
        logging.getLogger(__name__).warning(f"Failed to create or display run summary: {e}")
        return RunSummary(
            source="unknown",
            frames=None,
            pose_mode="unknown",
            rng_seed=0,
            output_dir="",
            params={},
        )
