from pathlib import Path

import pytest

from lidar_track.core.config import PipelineConfig, load_config
from lidar_track.datasets.synthetic.generator import load_scenario, materialize_scenario


@pytest.fixture
def configs_dir():
    """Fixture providing the directory of the shipped run configs."""
    base_dir = Path(__file__).parent.parent.parent
    return base_dir / "configs"


@pytest.fixture
def crossing_config_path(configs_dir):
    return str(configs_dir / "synthetic-crossing.yaml")


@pytest.fixture
def cyclists_config_path(configs_dir):
    return str(configs_dir / "synthetic-cyclists.yaml")


@pytest.fixture
def single_box_config(tmp_path):
    """Default pipeline on the single_box preset, writing under tmp_path."""
    return PipelineConfig().with_overrides(scenario="single_box", out=str(tmp_path / "run"))


@pytest.fixture
def crossing_config(crossing_config_path, tmp_path):
    return load_config(crossing_config_path).with_overrides(out=str(tmp_path / "crossing"))


@pytest.fixture
def single_box_drive(tmp_path):
    """A short single_box scenario written in KITTI raw layout."""
    scenario = load_scenario("single_box").with_overrides(frames=5)
    return materialize_scenario(scenario, tmp_path / "drive")
