import numpy as np
import pytest
import yaml

from lidar_track.core.exceptions import ConfigError
from lidar_track.datasets.synthetic.generator import (
    GROUND_INTENSITY,
    OBJECT_INTENSITY,
    SyntheticObject,
    SyntheticScenario,
    SyntheticSource,
    frame_truth,
    generate_synthetic,
    load_scenario,
    materialize_scenario,
)
from lidar_track.templates import get_scenario_path, list_scenarios


def _scenario(**kwargs):
    data = {
        "frames": 5,
        "ground": {"points": 300},
        "objects": [{"shape": "box", "size": [1, 1, 1], "position": [6, 0]}],
    }
    data.update(kwargs)
    return SyntheticScenario.from_dict(data)


def test_presets_are_bundled():
    assert {"single_box", "empty", "cyclists", "crossing"} <= set(list_scenarios())
    assert get_scenario_path("no_such_preset") is None


def test_every_preset_loads():
    for name in list_scenarios():
        scenario = load_scenario(name)
        assert scenario.name == name
        assert scenario.frames >= 1


def test_cyclists_preset_layout():
    scenario = load_scenario("cyclists")
    assert scenario.frames == 100
    assert scenario.ego.velocity == (5.0, 0.0)
    assert len(scenario.objects) == 3
    assert scenario.objects[2].points == 1500


def test_load_scenario_from_file(tmp_path):
    path = tmp_path / "mine.yaml"
    path.write_text(yaml.safe_dump({"frames": 3, "objects": []}))
    scenario = load_scenario(str(path))
    assert scenario.name == "mine"
    assert scenario.frames == 3


def test_unknown_scenario_rejected():
    with pytest.raises(ConfigError):
        load_scenario("no_such_preset")


def test_unknown_object_key_rejected():
    with pytest.raises(ConfigError):
        SyntheticObject.from_dict({"shape": "box", "colour": "red"})


def test_unknown_shape_rejected():
    with pytest.raises(ConfigError):
        SyntheticObject.from_dict({"shape": "cone"})


def test_two_element_position_rests_on_ground():
    obj = SyntheticObject.from_dict({"shape": "cylinder", "size": [0.4, 0.4, 1.7], "position": [3, 1]})
    assert obj.position == (3.0, 1.0, 0.85)


def test_same_seed_same_stream():
    a = [f.cloud.xyz for f, _ in generate_synthetic(_scenario(seed=4))]
    b = [f.cloud.xyz for f, _ in generate_synthetic(_scenario(seed=4))]
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_different_seed_different_stream():
    a = next(generate_synthetic(_scenario(seed=1)))[0].cloud.xyz
    b = next(generate_synthetic(_scenario(seed=2)))[0].cloud.xyz
    assert not np.array_equal(a, b)


def test_static_box_keeps_its_centroid():
    truths = [frame_truth(_scenario(), k) for k in range(2)]
    assert truths[0].objects[0].centroid == truths[1].objects[0].centroid


def test_moving_object_advances_per_frame():
    scenario = _scenario(
        objects=[{"shape": "box", "size": [1, 1, 1], "position": [6, 0], "velocity": [1.0, 0.0]}]
    )
    c0 = np.array(frame_truth(scenario, 0).objects[0].centroid)
    c1 = np.array(frame_truth(scenario, 1).objects[0].centroid)
    np.testing.assert_allclose(c1 - c0, [0.1, 0.0, 0.0], atol=1e-12)


def test_truth_is_shifted_by_sensor_height():
    truth = frame_truth(_scenario(), 0)
    np.testing.assert_allclose(truth.objects[0].centroid, [6.0, 0.0, 0.5 - 1.73])


def test_object_points_come_first_with_object_intensity():
    frame, truth = next(generate_synthetic(_scenario()))
    indices = np.array(truth.objects[0].point_indices)
    assert len(indices) == 400
    assert np.all(frame.cloud.intensity[indices] == OBJECT_INTENSITY)
    rest = np.setdiff1d(np.arange(len(frame.cloud)), indices)
    assert len(rest) == 300
    assert np.all(frame.cloud.intensity[rest] == GROUND_INTENSITY)


def test_object_indices_are_disjoint():
    scenario = load_scenario("cyclists").with_overrides(frames=1)
    truth = frame_truth(scenario, 0)
    seen = set()
    for obj in truth.objects:
        assert not seen & set(obj.point_indices)
        seen |= set(obj.point_indices)


def test_box_points_lie_on_its_surface():
    frame, _ = next(generate_synthetic(_scenario()))
    # sensor frame: sensor at height 1.73 above the scenario origin
    pts = frame.cloud.xyz[:400] - np.array([6.0, 0.0, 0.5 - 1.73])
    assert np.all(np.abs(pts) <= 0.5 + 1e-9)
    assert np.all(np.isclose(np.abs(pts).max(axis=1), 0.5))


def test_objects_out_of_range_are_not_visible():
    scenario = _scenario(
        sensor_range=20,
        objects=[
            {"shape": "box", "size": [1, 1, 1], "position": [10, 0]},
            {"shape": "sphere", "size": [1, 1, 1], "position": [40, 0]},
        ],
    )
    truth = frame_truth(scenario, 0)
    assert [o.object_id for o in truth.objects] == [0]


def test_empty_scenario_is_ground_only():
    scenario = load_scenario("empty").with_overrides(frames=2)
    frames = list(generate_synthetic(scenario))
    assert len(frames) == 2
    assert all(truth.objects == () for _, truth in frames)
    assert np.all(frames[0][0].cloud.intensity == GROUND_INTENSITY)


def test_with_overrides_keeps_everything_else():
    scenario = load_scenario("crossing")
    changed = scenario.with_overrides(seed=9, frames=4)
    assert (changed.seed, changed.frames) == (9, 4)
    assert changed.objects == scenario.objects
    assert changed.name == scenario.name


def test_source_limits_frames_and_serves_truth():
    source = SyntheticSource(_scenario(), max_frames=3)
    assert len(list(source)) == 3
    assert len(source.ground_truth()) == 3


def test_materialized_drive_layout(tmp_path):
    drive = materialize_scenario(_scenario(frames=2), tmp_path / "d")
    assert sorted(p.name for p in (drive / "velodyne_points" / "data").iterdir()) == [
        "0000000000.bin",
        "0000000001.bin",
    ]
    assert (drive / "oxts" / "data" / "0000000001.txt").exists()
    assert (drive / "ground_truth.jsonl").exists()
    assert yaml.safe_load((drive / "scenario.yaml").read_text())["frames"] == 2
