# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Utility modules for lidar-track runs.
"""

from .config_utils import require, section_from_dict
from .format_utils import read_json_lines, write_json_lines, write_yaml
from .logging import StageClock, get_logger
from .summary_utils import create_and_display_summary, create_run_summary
from .telemetry import RunSummary

__all__ = [
    "require",
    "section_from_dict",
    "read_json_lines",
    "write_json_lines",
    "write_yaml",
    "StageClock",
    "get_logger",
    "RunSummary",
    "create_run_summary",
    "create_and_display_summary",
]
