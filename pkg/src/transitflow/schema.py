"""The 17-attribute transit feed record schema and its constants."""

from __future__ import annotations

from typing import Final

# The 14 per-vehicle descriptor attributes, in wire order. Every record also
# carries lat, lng and timestamp, for 17 attributes total.
DESCRIPTOR_NAMES: Final[tuple[str, ...]] = (
    "vlr_id",
    "route_id_vlr",
    "route_name",
    "route_id_rta",
    "route_nickname",
    "trip_id_br",
    "transit_authority_service_time_id",
    "trip_id_tta",
    "trip_start",
    "trip_finish",
    "vehicle_id_vab",
    "vehicle_id_vlr",
    "vehicle_id_vlr_ta",
    "bdescription",
)

COORDINATE_NAMES: Final[tuple[str, ...]] = ("lat", "lng", "timestamp")

ALL_FIELD_NAMES: Final[tuple[str, ...]] = DESCRIPTOR_NAMES + COORDINATE_NAMES

# Descriptors used to form the partition key. Together with lat/lng/timestamp
# these are the essential attributes: a tuple missing any of them cannot be
# keyed or placed and is deleted instead of repaired.
ROUTE_KEY_ATTR: Final[str] = "route_id_vlr"
TRIP_KEY_ATTR: Final[str] = "trip_id_tta"
ESSENTIAL_DESCRIPTORS: Final[frozenset[str]] = frozenset({ROUTE_KEY_ATTR, TRIP_KEY_ATTR})

# Placeholder written into a repaired non-essential attribute.
NA_VALUE: Final[str] = "N/A"

# Street annotation sentinel for tuples outside every tagged grid cell.
WRONG_STREET_SEGMENT: Final[str] = "wrong street segment"

# Output attribute names appended by contextualization (a18..a24).
CONTEXT_FIELD_NAMES: Final[tuple[str, ...]] = (
    "a18_motion",
    "a19_activity",
    "a20_street",
    "a21_station",
    "a22_intersection",
    "a23_event",
    "a24_trip_position",
)

# Pipeline defaults.
CADENCE_S: Final[int] = 5              # expected report interval per vehicle
WINDOW_S: Final[int] = 5               # event-time window width
STOP_MOVE_THRESHOLD_M: Final[float] = 15.0
ZONE_RADIUS_M: Final[float] = 30.0     # station and intersection zones
GRID_CELL_M: Final[float] = 10.0
BUFFER_HALF_WIDTH_M: Final[float] = 30.0
SPARSE_TRIP_THRESHOLD: Final[int] = 100  # missing tuples that disqualify a trip
ALLOWED_LATENESS_S: Final[int] = 60
