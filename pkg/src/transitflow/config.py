"""Engine configuration: thresholds, worker count, lateness bound.

Defaults mirror the schema constants; a JSON config file may override any
subset. Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from . import schema
from .errors import ConfigError


@dataclass(frozen=True, slots=True)
class EngineConfig:
    cadence_s: int = schema.CADENCE_S
    window_s: int = schema.WINDOW_S
    stop_move_threshold_m: float = schema.STOP_MOVE_THRESHOLD_M
    zone_radius_m: float = schema.ZONE_RADIUS_M
    grid_cell_m: float = schema.GRID_CELL_M
    buffer_half_width_m: float = schema.BUFFER_HALF_WIDTH_M
    sparse_trip_threshold: int = schema.SPARSE_TRIP_THRESHOLD
    allowed_lateness_s: int = schema.ALLOWED_LATENESS_S
    workers: int = 1

    def __post_init__(self) -> None:
        if self.cadence_s <= 0 or self.window_s <= 0:
            raise ConfigError("cadence_s and window_s must be positive")
        if self.stop_move_threshold_m < 0 or self.zone_radius_m <= 0:
            raise ConfigError("distance thresholds must be positive")
        if self.grid_cell_m <= 0 or self.buffer_half_width_m <= 0:
            raise ConfigError("grid dimensions must be positive")
        if self.sparse_trip_threshold < 1:
            raise ConfigError("sparse_trip_threshold must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **overrides) -> "EngineConfig":
        return dataclasses.replace(self, **overrides)


def load_config(path: str | Path | None) -> EngineConfig:
    """Config from a JSON file of overrides; defaults when path is None."""
    if path is None:
        return EngineConfig()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    known = {f.name for f in dataclasses.fields(EngineConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"config {path} has unknown keys: {', '.join(unknown)}")
    try:
        return EngineConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
