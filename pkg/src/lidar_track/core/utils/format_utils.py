# Copyright (c) lidar-track contributors.
# All rights reserved.
#
# This source code is licensed under the terms described in the LICENSE file in
# the root directory of this source tree.
"""
Utility functions for writing and reading the line-delimited run artifacts.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable

import numpy as np
import pandas as pd
import yaml

from ..exceptions import DatasetError


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json_line(record: Dict[str, Any]) -> str:
    """One compact JSON document; key order is preserved."""
    return json.dumps(record, separators=(",", ":"), default=_plain)


class JsonLinesWriter:
    """Appends one JSON document per line; usable as a context manager."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w")
        self.count = 0

    def write(self, record: Dict[str, Any]) -> None:
        self._file.write(to_json_line(record) + "\n")
        self.count += 1

    def write_all(self, records: Iterable[Dict[str, Any]]) -> None:
        for record in records:
            self.write(record)

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    def __enter__(self) -> "JsonLinesWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_json_lines(path: str | Path, records: Iterable[Dict[str, Any]]) -> int:
    with JsonLinesWriter(path) as writer:
        writer.write_all(records)
        return writer.count


def read_json_lines(path: str | Path) -> pd.DataFrame:
    """
    Load a JSON-lines artifact into a DataFrame.

    Raises:
        DatasetError: if the file is missing or unparsable
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"File not found: {path}")
    if path.stat().st_size == 0:
        return pd.DataFrame()
    try:
        return pd.read_json(path, lines=True, dtype=False)
    except ValueError as e:
        raise DatasetError(f"Failed to parse {path}: {e}")


def write_yaml(path: str | Path, document: Dict[str, Any]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(document, f, sort_keys=False)
