from dataclasses import replace

import numpy as np
import pytest
import yaml

from lidar_track.core.descriptor import VfhDescriptor
from lidar_track.core.exceptions import ConfigError
from lidar_track.core.geometry import PointCloud
from lidar_track.core.occupancy import (
    OccupancyConfig,
    OccupancyMap,
    SuperFrameConfig,
    emit_superframe,
    superframe_due,
    update_occupancy,
    voxel_of,
    write_superframe,
)
from lidar_track.core.segmentation import summarize
from lidar_track.core.tracker import TrackIdAllocator, init_track


def _track(centre, confidence, allocator):
    xyz = np.asarray(centre, dtype=float).reshape(1, 3)
    cluster = summarize([0], PointCloud(xyz, np.zeros(1)))
    track = init_track(cluster, VfhDescriptor.from_pdf([1.0]), 0.0, allocator)
    return replace(track, confidence=confidence)


def test_config_validation():
    with pytest.raises(ConfigError):
        OccupancyConfig(miss_log_odds=0.1)
    with pytest.raises(ConfigError):
        SuperFrameConfig(period=0)


def test_voxel_index():
    assert voxel_of((0.55, 0.0, 0.0), 0.2) == (2, 0, 0)
    assert voxel_of((-0.05, 0.0, 0.0), 0.2) == (-1, 0, 0)


def test_single_hit():
    grid = OccupancyMap()
    assert grid.update(np.array([[0.55, 0.0, 0.0]]), frame_index=0) == 1
    assert grid.log_odds[(2, 0, 0)] == pytest.approx(0.85)
    assert grid.probability((2, 0, 0)) == pytest.approx(1 / (1 + np.exp(-0.85)))
    assert grid.probability((9, 9, 9)) == 0.5


def test_repeated_points_in_one_voxel_count_once():
    grid = OccupancyMap()
    grid.update(np.array([[0.01, 0.01, 0.01], [0.02, 0.02, 0.02]]), 0)
    assert grid.log_odds[(0, 0, 0)] == pytest.approx(0.85)


def test_log_odds_saturate():
    grid = OccupancyMap()
    for k in range(10):
        grid.update(np.array([[0.1, 0.1, 0.1]]), k)
    assert grid.log_odds[(0, 0, 0)] == 4.0
    assert grid.last_update[(0, 0, 0)] == 9


def test_free_space_carving():
    grid = OccupancyMap(OccupancyConfig(carve_free_space=True))
    grid.update(np.array([[1.05, 0.05, 0.05]]), 0, origin=(0.05, 0.05, 0.05))
    assert grid.log_odds[(5, 0, 0)] == pytest.approx(0.85)
    assert grid.log_odds[(0, 0, 0)] == pytest.approx(-0.4)
    assert grid.occupied_voxels() == [(5, 0, 0)]


def test_empty_update():
    grid = OccupancyMap()
    assert grid.update(np.zeros((0, 3)), 0) == 0
    assert len(grid) == 0


def test_update_occupancy_uses_matched_live_clusters():
    allocator = TrackIdAllocator()
    live = _track((0.0, 0.0, 0.0), 0.9, allocator)
    xyz = np.array([[1.0, 1.0, 1.0], [3.1, 3.1, 3.1]])
    cloud = PointCloud(xyz, np.zeros(2))
    clusters = {0: summarize([0], cloud, 0), 1: summarize([1], cloud, 1)}
    grid = update_occupancy(OccupancyMap(), [live], clusters, {live.id: 1, 99: 0}, 0)
    assert grid.occupied_voxels() == [(15, 15, 15)]


@pytest.mark.parametrize("index,due", [(0, False), (5, False), (10, True), (20, True), (21, False)])
def test_superframe_schedule(index, due):
    assert superframe_due(index, SuperFrameConfig(period=10)) is due


def test_superframes_over_35_frames():
    assert [k for k in range(35) if superframe_due(k)] == [10, 20, 30]


def test_superframe_without_tracks_is_still_emitted():
    sf = emit_superframe([], OccupancyMap(), 10, 1.0, 0.8)
    assert sf.frame == 10
    assert sf.tracks == ()
    assert sf.occupied_voxels == 0


def test_superframe_keeps_high_confidence_tracks():
    allocator = TrackIdAllocator()
    tracks = [
        _track((1.0, 0.0, 0.0), 0.8, allocator),
        _track((2.0, 0.0, 0.0), 0.79, allocator),
        _track((3.0, 0.0, 0.0), 1.0, allocator),
    ]
    sf = emit_superframe(tracks, OccupancyMap(), 20, 2.0, 0.8)
    assert [t["id"] for t in sf.tracks] == [0, 2]
    assert sf.tracks[0]["centroid"] == [1.0, 0.0, 0.0]


def test_write_superframe(tmp_path):
    allocator = TrackIdAllocator()
    grid = OccupancyMap()
    grid.update(np.array([[0.5, 0.5, 0.5]]), 0)
    sf = emit_superframe([_track((1.0, 2.0, 3.0), 0.9, allocator)], grid, 30, 3.0, 0.8)
    path = write_superframe(sf, tmp_path)
    assert path == tmp_path / "superframes" / "superframe_000030.yaml"
    data = yaml.safe_load(path.read_text())
    assert data["frame"] == 30
    assert data["occupied_voxels"] == 1
    assert data["tracks"][0]["confidence"] == 0.9
