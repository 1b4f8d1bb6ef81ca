# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Command-line interface for lidar-track.

This module provides the ``run``, ``score``, ``bench`` and ``gen`` commands.
Exit codes: 0 on success, 1 on input errors (config, dataset, missing
paths), 2 when a run aborts mid-stream (the frame index goes to stderr).
"""

import json
import sys
from pathlib import Path
from typing import Optional

import click

from lidar_track.core.config import PipelineConfig, load_config
from lidar_track.core.datasets import load_ground_truth
from lidar_track.core.evaluation import (
    SeedSweep,
    evaluate_seeds,
    measure_dbscan_scaling,
    report_timings,
    score_accuracy,
)
from lidar_track.core.exceptions import (
    ConfigError,
    DatasetError,
    EvaluationError,
    PipelineAbort,
)
from lidar_track.core.pipeline import run_pipeline
from lidar_track.core.utils.format_utils import read_json_lines, write_json_lines
from lidar_track.core.utils.logging import get_logger
from lidar_track.datasets.synthetic.generator import load_scenario, materialize_scenario
from lidar_track.templates import get_template_path, list_scenarios

EXIT_INPUT_ERROR = 1
EXIT_RUNTIME_ABORT = 2

LOG_LEVEL = click.Choice(
    ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False
)


def echo_flush(message, err=False):
    """Echo a message and flush the output buffer for real-time display."""
    click.echo(message, err=err)
    if err:
        sys.stderr.flush()
    else:
        sys.stdout.flush()


def fail(message: str, code: int = EXIT_INPUT_ERROR) -> None:
    click.echo(f"Error: {message}", err=True)
    sys.exit(code)


def resolve_config(
    config: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    pose_passthrough: bool,
    frames: Optional[int],
    log_level: Optional[str],
    scenario: Optional[str] = None,
) -> PipelineConfig:
    """
    Load ``config`` (or the bundled default) and apply command-line overrides.

    Raises:
        ConfigError: if the file is missing or invalid
    """
    cfg = load_config(config or get_template_path("default_config.yaml"))
    cfg = cfg.with_overrides(seed, out, pose_passthrough, frames, log_level, scenario)
    get_logger().configure(
        {"level": cfg.logging.level, "export_path": cfg.logging.export_path}, log_level
    )
    return cfg


def run_sweep(cfg: PipelineConfig, seeds) -> SeedSweep:
    """
    Run the pipeline once per seed, each into ``<out>/seed_<n>``.

    Raises:
        EvaluationError: if the source has no ground truth to score
    """
    base = Path(cfg.output.directory)

    def accuracy_for(seed: int):
        result = run_pipeline(cfg.with_overrides(seed=seed, out=str(base / f"seed_{seed}")))
        if result.accuracy is None:
            raise EvaluationError("Seed sweeps need a source with ground truth")
        return result.accuracy

    sweep = evaluate_seeds(accuracy_for, list(seeds))
    write_json_lines(base / "sweep.log", [sweep.summary()])
    return sweep


@click.group()
def cli():
    """
    lidar-track - Training-free LiDAR object identification and tracking.
    """
    pass


def pipeline_options(f):
    options = [
        click.option(
            "--config",
            default=None,
            help="Pipeline YAML config (defaults to the bundled template)",
        ),
        click.option("--seed", type=int, default=None, help="Override rng_seed"),
        click.option("--out", default=None, help="Override the output directory"),
        click.option(
            "--pose-passthrough",
            is_flag=True,
            default=False,
            help="Use OXTS poses directly instead of the EKF",
        ),
        click.option(
            "--frames",
            type=click.IntRange(min=1),
            default=None,
            help="Process at most N frames",
        ),
        click.option(
            "--scenario",
            default=None,
            help="Synthetic preset or scenario file replacing the config source",
        ),
        click.option(
            "--log-level", type=LOG_LEVEL, default=None, help="Set the logging level"
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@cli.command(name="run")
@pipeline_options
@click.option(
    "--sweep",
    "sweep_seeds",
    type=int,
    multiple=True,
    help="Repeat the run once per seed (repeatable) and report the median accuracy spread",
)
def run(config, seed, out, pose_passthrough, frames, scenario, log_level, sweep_seeds):
    """
    Run the tracking pipeline and write its logs.

    Example:
        lidar-track run --config configs/synthetic-cyclists.yaml --seed 3
    """
    try:
        cfg = resolve_config(config, seed, out, pose_passthrough, frames, log_level, scenario)
        if sweep_seeds:
            sweep = run_sweep(cfg, sweep_seeds)
        else:
            result = run_pipeline(cfg)
    except (ConfigError, DatasetError, EvaluationError) as e:
        fail(str(e))
    except PipelineAbort as e:
        click.echo(f"Run aborted at frame {e.frame_index}: {e}", err=True)
        sys.exit(EXIT_RUNTIME_ABORT)

    if sweep_seeds:
        summary = sweep.summary()
        echo_flush("\n=== Seed Sweep ===")
        echo_flush(f"Seeds             : {summary['seeds']}")
        echo_flush(f"Medians           : {summary['medians']}")
        echo_flush(f"Median of medians : {summary['median_of_medians']:.2%}")
        echo_flush(f"IQR               : {summary['q1']:.2%} - {summary['q3']:.2%}")
        lo, hi = summary["confidence_interval"]
        echo_flush(f"{summary['confidence_level']:.0%} interval      : {lo:.2%} - {hi:.2%}")
        return

    echo_flush("\n=== Run Complete ===")
    echo_flush(f"Frames processed : {result.frames}")
    echo_flush(f"Super frames     : {len(result.superframes)}")
    if result.accuracy is not None:
        echo_flush(result.accuracy.to_pretty())
    echo_flush(f"Results saved to : {result.output_dir}")


@cli.command(name="score")
@click.option("--tracks", "tracks_path", required=True, help="tracks.log of a run")
@click.option("--truth", "truth_path", required=True, help="ground_truth.jsonl")
@click.option("--radius", type=float, default=1.0, help="Match radius in metres")
@click.option("--out", default=None, help="Write the per-frame report as JSON lines")
def score(tracks_path, truth_path, radius, out):
    """Score identity preservation of a track log against ground truth."""
    try:
        tracks = read_json_lines(tracks_path)
        truth = load_ground_truth(truth_path)
        report = score_accuracy(tracks, truth, radius)
    except (DatasetError, EvaluationError) as e:
        fail(str(e))

    click.echo(report.to_pretty())
    if out:
        write_json_lines(out, report.records())
        click.echo(f"Report saved to: {out}")


@cli.command(name="bench")
@pipeline_options
@click.option(
    "--timings",
    "timings_path",
    default=None,
    help="Tabulate an existing timings.log instead of running",
)
@click.option(
    "--scaling",
    type=click.IntRange(min=1),
    default=None,
    help="Also time DBSCAN on N and 2N points",
)
@click.option(
    "--json", "as_json", is_flag=True, default=False, help="Print machine-readable records"
)
def bench(
    config,
    seed,
    out,
    pose_passthrough,
    frames,
    scenario,
    log_level,
    timings_path,
    scaling,
    as_json,
):
    """Print the per-stage timing table of a run."""
    try:
        if timings_path:
            timings = read_json_lines(timings_path)
        else:
            cfg = resolve_config(config, seed, out, pose_passthrough, frames, log_level, scenario)
            timings = run_pipeline(cfg).timings
        report = report_timings(timings)
    except (ConfigError, DatasetError, EvaluationError) as e:
        fail(str(e))
    except PipelineAbort as e:
        click.echo(f"Run aborted at frame {e.frame_index}: {e}", err=True)
        sys.exit(EXIT_RUNTIME_ABORT)

    records = report.records()
    if scaling:
        result = measure_dbscan_scaling(scaling)
        records.append(
            {"stage": "DBSCAN scaling n->2n", "n": scaling, "factor": round(result.factor, 4)}
        )
    if as_json:
        for record in records:
            click.echo(json.dumps(record))
        return
    click.echo(report.to_text())
    if scaling:
        click.echo(f"DBSCAN scaling n={scaling} -> {2 * scaling}: x{result.factor:.2f}")


@cli.command(name="gen")
@click.argument("scenario", required=True)
@click.option("--out", required=True, help="Drive directory to create")
@click.option("--seed", type=int, default=None, help="Override the scenario seed")
@click.option("--frames", type=click.IntRange(min=1), default=None, help="Override the frame count")
def gen(scenario, out, seed, frames):
    """
    Materialize a synthetic scenario as a KITTI-layout drive.

    SCENARIO is a preset name or a scenario YAML file.
    """
    try:
        scene = load_scenario(scenario).with_overrides(seed=seed, frames=frames)
        drive = materialize_scenario(scene, out)
    except ConfigError as e:
        fail(f"{e} (presets: {', '.join(list_scenarios())})")
    except DatasetError as e:
        fail(str(e))
    click.echo(f"Wrote {scene.frames} frames of '{scene.name}' to {drive}")


if __name__ == "__main__":
    cli()
