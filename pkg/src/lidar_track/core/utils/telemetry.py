# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Telemetry for tracking runs.

``RunSummary`` collects what a run is about to do (source, pose mode, key
thresholds, seed) and, once finished, what it produced.
"""

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from .logging import get_logger


@dataclass
class RunSummary:
    """
    Container for the run summary shown before processing starts and
    written as ``run_summary.json`` when it ends.
    """

    source: str
    frames: Optional[int]
    pose_mode: str
    rng_seed: int
    output_dir: str
    params: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)

    def to_pretty(self) -> str:
        """
        Format the summary as a human-readable string.

        Returns:
            A formatted string suitable for console display
        """
        pad = " " * 4
        lines = [
            "=== Run Summary ===",
            f"{pad}Source           : {self.source}",
            f"{pad}Frames           : {self.frames if self.frames is not None else 'all'}",
            f"{pad}Pose mode        : {self.pose_mode}",
            f"{pad}Seed             : {self.rng_seed}",
            f"{pad}Output           : {self.output_dir}",
            f"{pad}Params           : {json.dumps(self.params, separators=(',', ':'))}",
        ]
        for key, value in self.results.items():
            if isinstance(value, float):
                value = f"{value:.4f}"
            elif isinstance(value, dict):
                value = json.dumps(value, separators=(",", ":"))
            lines.append(f"{pad}{key:<17}: {value}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def log(self) -> None:
        get_logger().progress(self.to_pretty())
