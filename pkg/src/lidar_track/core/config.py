# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Pipeline configuration.

A run is described by one YAML file whose top-level sections map onto the
per-module config dataclasses. Missing sections take their defaults; unknown
sections or keys are rejected.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from ..templates import get_scenario_path
from .association import AssociationConfig
from .descriptor import DescriptorConfig
from .exceptions import ConfigError
from .occupancy import OccupancyConfig, SuperFrameConfig
from .pose_ekf import EkfConfig
from .preprocess import FilterConfig, RansacConfig
from .segmentation import DbscanConfig
from .tracker import DecayConfig, MotionConfig
from .utils.config_utils import require, section_from_dict

logger = logging.getLogger(__name__)

SOURCE_TYPES = ("synthetic", "kitti")
POSE_MODES = ("ekf", "passthrough")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class SourceConfig:
    """
    Attributes:
        type: ``synthetic`` or ``kitti``
        scenario: preset name or scenario file, for synthetic sources
        path: drive directory, for KITTI sources
        max_frames: optional cap on the number of frames read
    """

    type: str = "synthetic"
    scenario: Optional[str] = None
    path: Optional[str] = None
    max_frames: Optional[int] = None

    def __post_init__(self):
        require(self.type in SOURCE_TYPES, f"type must be one of {SOURCE_TYPES}, got '{self.type}'")
        if self.type == "synthetic":
            require(self.scenario is not None, "a synthetic source needs 'scenario'")
            require(self.path is None, "a synthetic source takes 'scenario', not 'path'")
        else:
            require(self.path is not None, "a kitti source needs 'path'")
            require(self.scenario is None, "a kitti source takes 'path', not 'scenario'")
        require(
            self.max_frames is None or self.max_frames >= 1, "max_frames must be >= 1"
        )


@dataclass(frozen=True)
class PoseConfig:
    mode: str = "ekf"
    ekf: EkfConfig = field(default_factory=EkfConfig)

    def __post_init__(self):
        require(self.mode in POSE_MODES, f"mode must be one of {POSE_MODES}, got '{self.mode}'")

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "PoseConfig":
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ConfigError("[pose] must be a mapping")
        unknown = sorted(set(data) - {"mode", "ekf"})
        if unknown:
            raise ConfigError(f"[pose] unknown keys: {unknown}")
        ekf = section_from_dict(EkfConfig, data.get("ekf"), "pose.ekf")
        try:
            return cls(mode=data.get("mode", "ekf"), ekf=ekf)
        except ConfigError as e:
            raise ConfigError(f"[pose] {e}")


@dataclass(frozen=True)
class EvaluationConfig:
    match_radius: float = 1.0

    def __post_init__(self):
        require(self.match_radius > 0, "match_radius must be > 0")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    association_trace: bool = False
    descriptor_dump: bool = False


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    export_path: Optional[str] = None

    def __post_init__(self):
        require(self.level.upper() in LOG_LEVELS, f"level must be one of {LOG_LEVELS}")


_SECTIONS = {
    "filter": FilterConfig,
    "ransac": RansacConfig,
    "dbscan": DbscanConfig,
    "descriptor": DescriptorConfig,
    "association": AssociationConfig,
    "motion": MotionConfig,
    "decay": DecayConfig,
    "occupancy": OccupancyConfig,
    "superframe": SuperFrameConfig,
    "evaluation": EvaluationConfig,
    "output": OutputConfig,
    "logging": LoggingConfig,
}


@dataclass(frozen=True)
class PipelineConfig:
    source: SourceConfig = field(
        default_factory=lambda: SourceConfig(type="synthetic", scenario="single_box")
    )
    pose: PoseConfig = field(default_factory=PoseConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    dbscan: DbscanConfig = field(default_factory=DbscanConfig)
    descriptor: DescriptorConfig = field(default_factory=DescriptorConfig)
    association: AssociationConfig = field(default_factory=AssociationConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    decay: DecayConfig = field(default_factory=DecayConfig)
    occupancy: OccupancyConfig = field(default_factory=OccupancyConfig)
    superframe: SuperFrameConfig = field(default_factory=SuperFrameConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    rng_seed: int = 0

    @classmethod
    def from_dict(
        cls, data: Optional[Dict[str, Any]], base_dir: Optional[Path] = None
    ) -> "PipelineConfig":
        """
        Build a config from a parsed YAML mapping.

        Relative source paths resolve against ``base_dir`` (the config file's
        directory) and must exist.

        Raises:
            ConfigError: on unknown sections or keys, invalid values or
                missing source paths
        """
        data = data or {}
        if not isinstance(data, dict):
            raise ConfigError("Config root must be a mapping")
        known = set(_SECTIONS) | {"source", "pose", "rng_seed"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config sections: {unknown}")

        kwargs: Dict[str, Any] = {
            name: section_from_dict(section_cls, data.get(name), name)
            for name, section_cls in _SECTIONS.items()
        }
        kwargs["pose"] = PoseConfig.from_dict(data.get("pose"))
        if "source" in data:
            kwargs["source"] = _resolve_source(
                section_from_dict(SourceConfig, data["source"], "source"), base_dir
            )
        seed = data.get("rng_seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"rng_seed must be an integer, got {seed!r}")
        kwargs["rng_seed"] = seed
        return cls(**kwargs)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        pose_passthrough: bool = False,
        frames: Optional[int] = None,
        log_level: Optional[str] = None,
        scenario: Optional[str] = None,
    ) -> "PipelineConfig":
        """
        Apply command-line overrides on top of the file values.

        A ``scenario`` replaces the source with that synthetic scenario; a
        relative file path resolves against the working directory.
        """
        cfg = self
        if scenario is not None:
            source = SourceConfig(
                type="synthetic", scenario=scenario, max_frames=cfg.source.max_frames
            )
            cfg = replace(cfg, source=_resolve_source(source, Path.cwd()))
        if seed is not None:
            cfg = replace(cfg, rng_seed=seed)
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, directory=out))
        if pose_passthrough:
            cfg = replace(cfg, pose=replace(cfg.pose, mode="passthrough"))
        if frames is not None:
            cfg = replace(cfg, source=replace(cfg.source, max_frames=frames))
        if log_level is not None:
            cfg = replace(cfg, logging=replace(cfg.logging, level=log_level.upper()))
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _resolve_source(source: SourceConfig, base_dir: Optional[Path]) -> SourceConfig:
    def resolve(value: str) -> Path:
        path = Path(value).expanduser()
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        return path

    if source.type == "kitti":
        path = resolve(source.path)
        if not path.is_dir():
            raise ConfigError(f"[source] KITTI drive directory not found: {path}")
        return replace(source, path=str(path))

    if get_scenario_path(source.scenario) is not None:
        return source
    path = resolve(source.scenario)
    if not path.is_file():
        raise ConfigError(f"[source] scenario is neither a preset nor a file: {source.scenario}")
    return replace(source, scenario=str(path))


def load_config(path: str | Path) -> PipelineConfig:
    """
    Load a pipeline config from YAML.

    Raises:
        ConfigError: if the file is missing, unparsable or invalid
    """
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Failed to load configuration from {path}: {e}")
    cfg = PipelineConfig.from_dict(data, base_dir=path.resolve().parent)
    logger.debug(f"Loaded configuration from {path}")
    return cfg
