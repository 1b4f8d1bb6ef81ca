# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Exceptions for the lidar-track pipeline.

This module defines custom exceptions used throughout the lidar-track tool.
"""

from typing import Optional


class ContractViolationError(ValueError):
    """Exception raised when a precondition or type invariant does not hold."""

    pass


class ConfigError(ValueError):
    """Exception raised when a configuration file or section is invalid."""

    pass


class DatasetError(Exception):
    """Exception raised when there's an issue with a frame source."""

    pass


class MalformedFileError(DatasetError):
    """Exception raised when a binary sensor file has an impossible layout."""

    pass


class OxtsParseError(DatasetError):
    """Exception raised when an OXTS record cannot be parsed."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DegenerateInputError(ValueError):
    """Exception raised when an input is too small or too degenerate to fit."""

    pass


class NumericallyDegenerateError(ArithmeticError):
    """Exception raised when a filter update hits a singular covariance."""

    pass


class MeasurementRejectedError(ValueError):
    """Exception raised when a measurement is rejected before an update."""

    pass


class MotionModelUnavailable(LookupError):
    """Raised when a track is too young for a motion likelihood."""

    pass


class EvaluationError(Exception):
    """Exception raised when scoring or reporting fails."""

    pass


class PipelineAbort(RuntimeError):
    """Exception raised when a run cannot continue past a frame."""

    def __init__(self, message: str, frame_index: Optional[int] = None):
        prefix = f"frame {frame_index}: " if frame_index is not None else ""
        super().__init__(f"{prefix}{message}")
        self.frame_index = frame_index
