# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Utility functions for mapping config-file sections onto dataclasses.
"""

from dataclasses import fields
from typing import Any, Dict, Optional, Type, TypeVar

from ..exceptions import ConfigError

T = TypeVar("T")


def section_from_dict(cls: Type[T], data: Optional[Dict[str, Any]], section: str) -> T:
    """Build ``cls`` from one config section.

    Args:
        cls: a dataclass whose field names are the section's keys
        data: the parsed section; ``None`` yields the defaults
        section: section name used in error messages

    Returns:
        An instance of ``cls``

    Raises:
        ConfigError: on unknown keys or values the dataclass rejects
    """
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"[{section}] must be a mapping, got {type(data).__name__}")
    allowed = {f.name for f in fields(cls)}  # type: ignore[arg-type]
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {unknown}")
    try:
        return cls(**data)
    except ConfigError as e:
        raise ConfigError(f"[{section}] {e}")
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[{section}] invalid value: {e}")


def require(condition: bool, message: str) -> None:
    """Raise ``ConfigError(message)`` unless ``condition`` holds."""
    if not condition:
        raise ConfigError(message)
