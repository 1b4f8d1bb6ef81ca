import math

import numpy as np
import pytest

from lidar_track.core.datasets import GpsFix, ImuSample, load_ground_truth
from lidar_track.core.exceptions import DatasetError, MalformedFileError, OxtsParseError
from lidar_track.core.geometry import Frame, PointCloud, RigidTransform
from lidar_track.datasets.kitti.adapter import (
    KittiRawSource,
    gps_to_local,
    local_to_gps,
    read_calibration,
    read_oxts,
    read_timestamps,
    read_velodyne_bin,
    write_calibration,
    write_oxts,
    write_velodyne_bin,
)
from lidar_track.datasets.synthetic.generator import load_scenario, materialize_scenario

OXTS_LINE = (
    "49.015 8.43 116.4 0.03 -0.01 1.2 3.5 4.5 5.1 0.2 0.01 "
    "0.1 0.2 9.8 0.1 0.2 9.8 0.001 0.002 0.05 0.001 0.002 0.05 "
    "0.05 0.05 4 10 5 5 0"
)


@pytest.fixture
def drive(tmp_path):
    scenario = load_scenario("single_box").with_overrides(frames=3)
    return materialize_scenario(scenario, tmp_path / "drive")


def test_read_single_point(tmp_path):
    path = tmp_path / "one.bin"
    path.write_bytes(np.array([1.0, 2.0, 3.0, 0.5], dtype="<f4").tobytes())
    cloud = read_velodyne_bin(path)
    assert len(cloud) == 1
    np.testing.assert_allclose(cloud.xyz[0], [1.0, 2.0, 3.0])
    assert cloud.intensity[0] == 0.5
    assert cloud.frame_id == Frame.SENSOR


def test_read_empty_file_gives_empty_cloud(tmp_path):
    path = tmp_path / "empty.bin"
    path.write_bytes(b"")
    assert read_velodyne_bin(path).is_empty


def test_read_truncated_file_is_malformed(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00" * 17)
    with pytest.raises(MalformedFileError):
        read_velodyne_bin(path)


def test_nan_points_dropped(tmp_path):
    path = tmp_path / "nan.bin"
    data = np.array([[1, 2, 3, 0.1], [np.nan, 0, 0, 0.2], [4, 5, 6, 0.3]], dtype="<f4")
    path.write_bytes(data.tobytes())
    cloud = read_velodyne_bin(path)
    assert len(cloud) == 2
    np.testing.assert_allclose(cloud.intensity, [0.1, 0.3], rtol=1e-6)


def test_velodyne_write_then_read(tmp_path):
    cloud = PointCloud(np.array([[1.5, -2.0, 0.25]]), np.array([0.75]))
    write_velodyne_bin(tmp_path / "w.bin", cloud)
    back = read_velodyne_bin(tmp_path / "w.bin", timestamp=0.3)
    np.testing.assert_allclose(back.xyz, cloud.xyz)
    assert back.timestamp == 0.3


def test_read_oxts_fields(tmp_path):
    path = tmp_path / "oxts.txt"
    path.write_text(OXTS_LINE + "\n")
    (record,) = read_oxts(path)
    assert record.gps == GpsFix(49.015, 8.43, 116.4)
    assert record.orientation == (0.03, -0.01, 1.2)
    assert record.world_velocity == (4.5, 3.5, 0.01)
    assert record.imu.accel == (0.1, 0.2, 9.8)
    assert record.imu.gyro == (0.001, 0.002, 0.05)


def test_read_oxts_two_lines(tmp_path):
    path = tmp_path / "oxts.txt"
    path.write_text(OXTS_LINE + "\n\n" + OXTS_LINE + "\n")
    assert len(read_oxts(path)) == 2


def test_short_oxts_line_reports_line_number(tmp_path):
    path = tmp_path / "oxts.txt"
    path.write_text(OXTS_LINE + "\n1 2 3 4 5\n")
    with pytest.raises(OxtsParseError) as info:
        read_oxts(path)
    assert info.value.line_number == 2
    assert "line 2" in str(info.value)


def test_non_numeric_oxts_field(tmp_path):
    path = tmp_path / "oxts.txt"
    path.write_text(OXTS_LINE.replace("116.4", "abc") + "\n")
    with pytest.raises(OxtsParseError):
        read_oxts(path)


def test_write_oxts_is_readable(tmp_path):
    imu = ImuSample(accel=(0.0, 0.0, 9.81), gyro=(0.0, 0.0, 0.1))
    write_oxts(tmp_path / "o.txt", GpsFix(48.0, 8.0, 100.0), (0.0, 0.0, 0.5), (1.0, 2.0, 0.0), imu)
    (record,) = read_oxts(tmp_path / "o.txt")
    assert record.world_velocity == (1.0, 2.0, 0.0)
    assert record.vf == pytest.approx(math.cos(0.5) + 2.0 * math.sin(0.5))
    assert record.imu == imu


def test_gps_origin_maps_to_zero():
    origin = GpsFix(49.0, 8.4, 100.0)
    assert gps_to_local(origin, origin) == (0.0, 0.0)


def test_gps_degree_spacing_at_equator():
    origin = GpsFix(0.0, 0.0, 0.0)
    x, y = gps_to_local(GpsFix(0.0, 0.001, 0.0), origin)
    assert x == pytest.approx(111.3, abs=0.5)
    assert y == pytest.approx(0.0, abs=1e-9)
    x, y = gps_to_local(GpsFix(0.001, 0.0, 0.0), origin)
    assert y == pytest.approx(111.3, abs=0.5)


def test_local_to_gps_inverts_projection():
    origin = GpsFix(49.0, 8.4, 100.0)
    fix = local_to_gps(120.0, -35.0, origin, alt=101.0)
    x, y = gps_to_local(fix, origin)
    assert x == pytest.approx(120.0, abs=1e-6)
    assert y == pytest.approx(-35.0, abs=1e-6)
    assert fix.alt == 101.0


def test_timestamps_keep_nanoseconds(tmp_path):
    path = tmp_path / "timestamps.txt"
    path.write_text(
        "2011-09-26 13:02:25.964389445\n"
        "2011-09-26 13:02:26.067999458\n"
        "2011-09-26 13:02:26.171530009\n"
    )
    seconds = read_timestamps(path)
    np.testing.assert_allclose(seconds, [0.0, 0.103610013, 0.207140564], atol=1e-6)


def test_calibration_write_then_read(tmp_path):
    c, s = math.cos(0.2), math.sin(0.2)
    tf = RigidTransform(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]]), [0.8, -0.3, 0.9])
    write_calibration(tmp_path / "calib.txt", tf)
    back = read_calibration(tmp_path / "calib.txt")
    np.testing.assert_allclose(back.rotation, tf.rotation, atol=1e-9)
    np.testing.assert_allclose(back.translation, tf.translation)


def test_calibration_without_translation(tmp_path):
    (tmp_path / "calib.txt").write_text("R: 1 0 0 0 1 0 0 0 1\n")
    with pytest.raises(DatasetError):
        read_calibration(tmp_path / "calib.txt")


def test_raw_source_reads_materialized_drive(drive):
    source = KittiRawSource(drive)
    frames = list(source)
    assert [f.index for f in frames] == [0, 1, 2]
    assert [f.timestamp for f in frames] == pytest.approx([0.0, 0.1, 0.2], abs=1e-9)
    assert all(len(f.cloud) > 0 for f in frames)
    np.testing.assert_allclose(source.extrinsic.matrix(), np.eye(4))
    truth = source.ground_truth()
    assert len(truth) == 3
    assert truth == load_ground_truth(drive / "ground_truth.jsonl")


def test_raw_source_respects_max_frames(drive):
    assert len(list(KittiRawSource(drive, max_frames=2))) == 2


def test_raw_source_uses_calibration(drive):
    tf = RigidTransform(np.eye(3), [0.0, 0.0, -0.5])
    write_calibration(drive / "calib_imu_to_velo.txt", tf)
    np.testing.assert_allclose(KittiRawSource(drive).extrinsic.translation, [0.0, 0.0, 0.5])


def test_raw_source_missing_directory(tmp_path):
    with pytest.raises(DatasetError):
        KittiRawSource(tmp_path / "nowhere")


def test_raw_source_without_sweeps(tmp_path):
    (tmp_path / "velodyne_points" / "data").mkdir(parents=True)
    with pytest.raises(DatasetError):
        KittiRawSource(tmp_path)
