"""
End-to-end runs of the tracking pipeline on synthetic scenes.
"""

import json
from dataclasses import replace

import pytest
import yaml

from lidar_track.core.config import PipelineConfig, SourceConfig, load_config
from lidar_track.core.evaluation import evaluate_seeds
from lidar_track.core.exceptions import PipelineAbort
from lidar_track.core.pipeline import run_pipeline
from lidar_track.core.utils.format_utils import read_json_lines


def test_single_box_keeps_one_identity(single_box_config):
    result = run_pipeline(single_box_config)
    assert result.frames == 20

    tracks = read_json_lines(result.output_dir / "tracks.log")
    per_frame = tracks.groupby("frame")["track"].nunique()
    assert per_frame.tolist() == [1] * 20
    assert tracks["track"].nunique() == 1
    assert tracks["confidence"].iloc[-1] == 1.0

    assert result.accuracy is not None
    assert result.accuracy.id_switches == 0
    assert result.accuracy.median == 1.0


def test_run_writes_artifacts(single_box_config):
    result = run_pipeline(single_box_config)
    out = result.output_dir
    for name in ["tracks.log", "poses.log", "timings.log", "accuracy.log", "run_summary.json"]:
        assert (out / name).exists(), name

    assert len(read_json_lines(out / "poses.log")) == 20
    timings = read_json_lines(out / "timings.log")
    assert len(timings) == 20
    assert (timings["total"] >= 0).all()

    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["results"]["frames"] == 20
    assert summary["results"]["accuracy"]["id_switches"] == 0

    superframe = yaml.safe_load((out / "superframes" / "superframe_000010.yaml").read_text())
    assert superframe["frame"] == 10
    assert len(superframe["tracks"]) == 1


def test_optional_logs(single_box_config):
    cfg = single_box_config.with_overrides(frames=5)
    cfg = replace(cfg, output=replace(cfg.output, association_trace=True, descriptor_dump=True))
    result = run_pipeline(cfg)
    trace = read_json_lines(result.output_dir / "association.log")
    descriptors = read_json_lines(result.output_dir / "descriptors.log")
    assert set(trace["frame"]) <= set(range(5))
    assert len(descriptors["pdf"].iloc[0]) == 308


def test_empty_scene_has_no_tracks(tmp_path):
    cfg = PipelineConfig().with_overrides(scenario="empty", out=str(tmp_path / "empty"))
    result = run_pipeline(cfg)
    assert result.track_records == []
    assert result.accuracy is None
    assert [sf.frame for sf in result.superframes] == [10]
    assert result.superframes[0].tracks == ()


def test_runs_are_reproducible(tmp_path):
    first = PipelineConfig().with_overrides(scenario="crossing", frames=15, out=str(tmp_path / "a"))
    second = first.with_overrides(out=str(tmp_path / "b"))
    run_pipeline(first)
    run_pipeline(second)
    assert (tmp_path / "a" / "tracks.log").read_bytes() == (tmp_path / "b" / "tracks.log").read_bytes()


def test_materialized_drive_matches_in_memory_scene(single_box_drive, tmp_path):
    cfg = PipelineConfig(
        source=SourceConfig(type="kitti", path=str(single_box_drive))
    ).with_overrides(out=str(tmp_path / "kitti"))
    result = run_pipeline(cfg)
    assert result.frames == 5
    assert result.accuracy is not None
    assert result.accuracy.median == 1.0


def test_corrupt_sweep_aborts_at_its_frame(single_box_drive, tmp_path):
    bins = sorted((single_box_drive / "velodyne_points" / "data").glob("*.bin"))
    bins[2].write_bytes(b"\x00" * 10)

    cfg = PipelineConfig(
        source=SourceConfig(type="kitti", path=str(single_box_drive))
    ).with_overrides(out=str(tmp_path / "abort"))
    with pytest.raises(PipelineAbort) as info:
        run_pipeline(cfg)
    assert info.value.frame_index == 2
    assert len(read_json_lines(tmp_path / "abort" / "poses.log")) == 2


@pytest.mark.parametrize("seed", range(5))
def test_crossing_targets_keep_their_ids(crossing_config, seed):
    result = run_pipeline(crossing_config.with_overrides(seed=seed))
    accuracy = result.accuracy
    assert accuracy.id_switches == 0
    assert accuracy.median >= 0.9
    correct = sum(f.correct for f in accuracy.per_frame)
    assert correct / accuracy.visible >= 0.95

    trace = read_json_lines(result.output_dir / "association.log")
    assert (trace["reason"] == "motion").any()


def test_passthrough_pose_has_zero_error(tmp_path):
    cfg = PipelineConfig().with_overrides(
        scenario="cyclists", frames=5, pose_passthrough=True, out=str(tmp_path / "pt")
    )
    result = run_pipeline(cfg)
    assert max(result.pose_errors) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.slow
def test_cyclists_seed_sweep(cyclists_config_path, tmp_path):
    base = load_config(cyclists_config_path)

    def accuracy(seed):
        return run_pipeline(base.with_overrides(seed=seed, out=str(tmp_path / f"s{seed}"))).accuracy

    sweep = evaluate_seeds(accuracy, range(10))
    assert len(sweep.medians) == 10
    assert sweep.median_of_medians >= 0.88
    lo, hi = sweep.confidence_interval
    assert lo <= sweep.mean <= hi
    assert sweep.q1 <= sweep.median_of_medians <= sweep.q3
    for report in sweep.reports:
        assert report.q1 <= report.median <= report.q3
    summary = sweep.summary()
    assert summary["confidence_level"] == 0.95
    assert summary["q1"] <= summary["median_of_medians"] <= summary["q3"]
