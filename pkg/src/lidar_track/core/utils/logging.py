"""
Run-level logging and telemetry for lidar-track.

A single ``LoggingManager`` owns the ``lidar_track`` logger. Algorithm modules
log through ``logging.getLogger(__name__)`` and their records end up on the
manager's handler; the manager itself adds phase timings, metric records and
an optional JSON export at exit.
"""

import atexit
import json
import logging
import os
import time
from contextlib import contextmanager
from datetime import datetime
from typing import Any, Dict, Iterator, List, Optional

_LOG_SINGLETON: "LoggingManager|None" = None

DEFAULT_LEVEL = os.getenv("LIDAR_TRACK_LOG_LEVEL", "INFO").upper()


def resolve_export_path(path: str, now: Optional[datetime] = None) -> str:
    """Expand the ``${TIMESTAMP}`` placeholder to ``YYYYMMDD_HHMMSS``."""
    if "${TIMESTAMP}" not in path:
        return path
    stamp = (now or datetime.now()).strftime("%Y%m%d_%H%M%S")
    return path.replace("${TIMESTAMP}", stamp)


class LoggingManager:
    def __init__(self, level: str = DEFAULT_LEVEL):
        self.logger = logging.getLogger("lidar_track")
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            fmt = "%(asctime)s | %(levelname)-7s | %(message)s"
            handler.setFormatter(logging.Formatter(fmt))
            self.logger.addHandler(handler)

        # lidar_track.* module loggers stop here instead of reaching root
        self.logger.propagate = False

        self.set_level(level)

        self.timings: Dict[str, float] = {}
        self.metrics: List[Dict[str, Any]] = []
        self.export_path: Optional[str] = None

        atexit.register(self._dump_timings)

    def __del__(self):
        try:
            atexit.unregister(self._dump_timings)
            atexit.unregister(self.export_json)
        except ValueError:
            pass

    # ---- configuration --------------------------------------------------
    def set_level(self, level: str) -> None:
        self.logger.setLevel(level.upper())

    def configure(self, section: Dict[str, Any], level_override: Optional[str] = None):
        """
        Apply the ``logging:`` section of a pipeline config.

        Args:
            section: mapping with optional ``level`` and ``export_path`` keys
            level_override: level given on the command line; wins over the file
        """
        level = level_override or section.get("level")
        if level:
            self.set_level(level)
        export_path = section.get("export_path")
        if export_path:
            self.export_path = resolve_export_path(export_path)
            # one export per process; a reconfigure replaces the target
            atexit.unregister(self.export_json)
            atexit.register(self.export_json, self.export_path)
            self.logger.info(f"Will export telemetry to {self.export_path} on exit.")

    # ---- phase tracking --------------------------------------------------
    def start_phase(self, name: str) -> None:
        # phases accumulate so per-frame stages sum over the whole run
        self.timings[name] = self.timings.get(name, 0.0) - time.perf_counter()

    def end_phase(self, name: str) -> None:
        if name not in self.timings:
            return
        self.timings[name] += time.perf_counter()

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        self.start_phase(name)
        try:
            yield
        finally:
            self.end_phase(name)
            self.logger.debug(f"[{name}] total {self.timings[name]:.3f}s")

    # ---- progress + metrics ---------------------------------------------
    def progress(self, msg: str, level: str = "INFO") -> None:
        getattr(self.logger, level.lower())(msg)

    def log_metric(self, key: str, value: Any, step: Optional[int] = None) -> None:
        rec = {"key": key, "value": value, "step": step, "time": time.time()}
        self.metrics.append(rec)
        self.logger.debug(f"[metric] {key}={value} step={step}")

    # ---- export ----------------------------------------------------------
    def export_json(self, path: str) -> None:
        try:
            with open(path, "w") as f:
                json.dump(
                    {"timings": self.timings, "metrics": self.metrics}, f, indent=2
                )
        except Exception as e:
            self.logger.error(f"Failed to export telemetry to {path}: {str(e)}")

    def _dump_timings(self) -> None:
        if not self.timings:
            return

        for handler in self.logger.handlers:
            if hasattr(handler, "stream") and hasattr(handler.stream, "closed"):
                if handler.stream.closed:
                    return

        try:
            self.logger.info("=== Stage timings (run total) ===")
            for k, v in self.timings.items():
                self.logger.info(f"{k:<28} {v:8.3f}s")
        except (ValueError, AttributeError, OSError):
            pass


class StageClock:
    """
    Wall-clock timer for the stages of a single frame.

    Each ``stage(name)`` block adds its elapsed milliseconds to ``elapsed_ms``.
    When a ``LoggingManager`` is attached the same block also counts towards
    the run-level phase of that name.
    """

    def __init__(self, manager: Optional[LoggingManager] = None):
        self.manager = manager
        self.elapsed_ms: Dict[str, float] = {}
        self._started = time.perf_counter()

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        if self.manager is not None:
            self.manager.start_phase(name)
        try:
            yield
        finally:
            if self.manager is not None:
                self.manager.end_phase(name)
            ms = (time.perf_counter() - start) * 1000.0
            self.elapsed_ms[name] = self.elapsed_ms.get(name, 0.0) + ms

    def total_ms(self) -> float:
        return (time.perf_counter() - self._started) * 1000.0


def get_logger() -> LoggingManager:
    global _LOG_SINGLETON
    if _LOG_SINGLETON is None:
        _LOG_SINGLETON = LoggingManager()
    return _LOG_SINGLETON
