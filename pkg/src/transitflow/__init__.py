"""Streaming cleanup and mobility contextualization for transit GPS feeds.

The package ingests vehicle-location tuples in 5-second event-time
windows, repairs and deduplicates them, and enriches each tuple with
seven mobility-context attributes (motion, activity class, street,
station and direction, intersection, arrival/departure event, and trip
position) under a keyed map/shuffle/reduce engine.
"""

from .cleaning import CleanReport, clean_dataset
from .config import EngineConfig, load_config
from .context import ReferenceData, StationVisit, TripContext, contextualize_trip
from .engine import (
    PartitionJob,
    PhaseTiming,
    RunResult,
    clean_to_file,
    contextualize_file,
    map_phase,
    reduce_phase,
    run_pipeline,
    shuffle,
)
from .errors import TransitFlowError
from .geo import LocalFrame
from .gtfs import GtfsBundle, load_gtfs, write_gtfs
from .ingest import EventWindow, IngestSummary, ReplaySource, group_into_windows, ingest_loop
from .model import (
    ActivityClass,
    ContextTuple,
    Direction,
    MotionLabel,
    RawTuple,
    StationTag,
    StopEvent,
    TripKey,
)
from .spatial import (
    CircularZone,
    RouteBufferGrid,
    RouteGeometry,
    build_route_buffer_grid,
    build_station_zones,
    derive_intersections,
    load_geometry,
    route_midpoint,
    write_geometry,
)
from .store import TupleStore

__version__ = "1.0.0"

__all__ = [
    "ActivityClass",
    "CircularZone",
    "CleanReport",
    "ContextTuple",
    "Direction",
    "EngineConfig",
    "EventWindow",
    "GtfsBundle",
    "IngestSummary",
    "LocalFrame",
    "MotionLabel",
    "PartitionJob",
    "PhaseTiming",
    "RawTuple",
    "ReferenceData",
    "ReplaySource",
    "RouteBufferGrid",
    "RouteGeometry",
    "RunResult",
    "StationTag",
    "StationVisit",
    "StopEvent",
    "TransitFlowError",
    "TripContext",
    "TripKey",
    "TupleStore",
    "build_route_buffer_grid",
    "build_station_zones",
    "clean_dataset",
    "clean_to_file",
    "contextualize_file",
    "contextualize_trip",
    "derive_intersections",
    "group_into_windows",
    "ingest_loop",
    "load_config",
    "load_geometry",
    "load_gtfs",
    "map_phase",
    "reduce_phase",
    "route_midpoint",
    "run_pipeline",
    "shuffle",
    "write_geometry",
    "write_gtfs",
]
