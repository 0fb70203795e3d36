"""Per-trip mobility-context enrichment: the seven annotation steps.

Given one cleaned, timestamp-sorted trip and immutable reference data for
its route, the steps run in order: stop/move labeling, activity
classification against station zones, street-name annotation through the
route buffer grid, station id + travel direction, intersection id,
arrival/departure events from stopover runs, and origin/destination/index
tagging. Each step is a pure function; contextualize_trip composes them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import schema
from .errors import GeometryError, UnknownRouteError
from .geo import LocalFrame
from .gtfs import GtfsBundle
from .model import (
    DESTINATION,
    ORIGIN,
    ActivityClass,
    ContextTuple,
    Direction,
    MotionLabel,
    RawTuple,
    StationTag,
    StopEvent,
    TripKey,
    TripPosition,
)
from .spatial import (
    CircularZone,
    RoadLine,
    RouteBufferGrid,
    RouteGeometry,
    RouteMidpoint,
    ZoneIndex,
    build_route_buffer_grid,
    build_station_zones,
    derive_intersections,
    route_midpoint,
)

XY = tuple[float, float]


@dataclass(frozen=True, slots=True)
class StationVisit:
    """A maximal consecutive run of stopovers at one station.

    The first member's timestamp is the actual arrival time, the last
    member's the departure time.
    """

    station_id: str
    direction: Direction
    arrival_ts: int
    departure_ts: int
    tuple_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.arrival_ts > self.departure_ts:
            raise ValueError("visit arrival after departure")


def project_trip(trip: Sequence[RawTuple], frame: LocalFrame) -> list[XY]:
    """Project a trip into frame meters, enforcing the validity radius."""
    return [frame.require(t.lat, t.lng) for t in trip]


def detect_stop_move(
    trip: Sequence[RawTuple],
    frame: LocalFrame,
    threshold_m: float = schema.STOP_MOVE_THRESHOLD_M,
    xy: Sequence[XY] | None = None,
) -> list[MotionLabel]:
    """Step 1: label each tuple stop or move.

    The second tuple of each consecutive pair is a move iff the pair is
    strictly more than threshold_m apart (exactly 15 m is a stop). The
    first tuple has no predecessor and is labeled stop: trips begin at rest
    at a terminus, and the label partition then covers every tuple.
    """
    if xy is None:
        xy = project_trip(trip, frame)
    labels = [MotionLabel.STOP]
    for i in range(1, len(xy)):
        d = math.hypot(xy[i][0] - xy[i - 1][0], xy[i][1] - xy[i - 1][1])
        labels.append(MotionLabel.MOVE if d > threshold_m else MotionLabel.STOP)
    return labels[: len(xy)]


def classify_activity(
    trip: Sequence[RawTuple],
    motions: Sequence[MotionLabel],
    station_index: ZoneIndex,
    xy: Sequence[XY] | None = None,
) -> list[ActivityClass]:
    """Step 2: split motion labels by presence inside any station zone."""
    if xy is None:
        xy = project_trip(trip, station_index.frame)
    out: list[ActivityClass] = []
    for (x, y), motion in zip(xy, motions):
        inside = station_index.query_xy(x, y) is not None
        if motion is MotionLabel.MOVE:
            out.append(ActivityClass.PASSING if inside else ActivityClass.RUNNING)
        else:
            out.append(ActivityClass.STOPOVER if inside else ActivityClass.SUSPENSION)
    return out


def annotate_street(
    trip: Sequence[RawTuple],
    grid: RouteBufferGrid,
    xy: Sequence[XY] | None = None,
) -> list[str]:
    """Step 3: street-segment name from the buffer grid, or the sentinel."""
    if xy is None:
        xy = project_trip(trip, grid.frame)
    return [grid.lookup_xy(x, y) for x, y in xy]


def direction_split(
    xy: Sequence[XY],
    midpoint_xy: XY,
    radius_m: float = schema.ZONE_RADIUS_M,
) -> int:
    """Index of the trip's first tuple inside the route-midpoint zone.

    Tuples before that index are outbound, from it on they are return;
    len(xy) when the trip never reaches the midpoint (all outbound).
    """
    mx, my = midpoint_xy
    for i, (x, y) in enumerate(xy):
        if math.hypot(x - mx, y - my) <= radius_m:
            return i
    return len(xy)


def identify_station(
    trip: Sequence[RawTuple],
    activities: Sequence[ActivityClass],
    station_index: ZoneIndex,
    midpoint: RouteMidpoint,
    radius_m: float = schema.ZONE_RADIUS_M,
    xy: Sequence[XY] | None = None,
) -> list[StationTag | None]:
    """Step 4: station id + direction for stopover/passing tuples.

    The containing zone's id is used (nearest center when zones overlap).
    Direction flips from outbound to return at the first tuple within the
    midpoint's zone.
    """
    if xy is None:
        xy = project_trip(trip, station_index.frame)
    midpoint_xy = station_index.frame.to_xy(midpoint.lat, midpoint.lng)
    split = direction_split(xy, midpoint_xy, radius_m)
    tags: list[StationTag | None] = []
    for i, activity in enumerate(activities):
        if activity not in (ActivityClass.STOPOVER, ActivityClass.PASSING):
            tags.append(None)
            continue
        zone = station_index.query_xy(xy[i][0], xy[i][1])
        # Step 2 already established zone membership for these classes.
        assert zone is not None, "stopover/passing tuple outside every station zone"
        direction = Direction.OUTBOUND if i < split else Direction.RETURN
        tags.append(StationTag(station_id=zone.anchor_id, direction=direction))
    return tags


def identify_intersection(
    trip: Sequence[RawTuple],
    intersection_index: ZoneIndex,
    xy: Sequence[XY] | None = None,
) -> list[str | None]:
    """Step 5: containing intersection zone's id, else null."""
    if xy is None:
        xy = project_trip(trip, intersection_index.frame)
    out: list[str | None] = []
    for x, y in xy:
        zone = intersection_index.query_xy(x, y)
        out.append(None if zone is None else zone.anchor_id)
    return out


def compute_arrival_departure(
    trip: Sequence[RawTuple],
    activities: Sequence[ActivityClass],
    stations: Sequence[StationTag | None],
) -> tuple[list[StopEvent], list[StationVisit]]:
    """Step 6: arrival/departure events from maximal stopover runs.

    A visit is a maximal run of consecutive stopovers tagged with the same
    station and direction; its first tuple is the arrival, its last the
    departure, and a single-tuple visit is both at once. Revisits on loop
    routes form separate visits because any non-stopover tuple (or station
    change) breaks the run.
    """
    events: list[StopEvent] = [StopEvent.NONE] * len(trip)
    visits: list[StationVisit] = []
    i = 0
    while i < len(trip):
        if activities[i] is not ActivityClass.STOPOVER:
            i += 1
            continue
        j = i
        while (
            j + 1 < len(trip)
            and activities[j + 1] is ActivityClass.STOPOVER
            and stations[j + 1] == stations[i]
        ):
            j += 1
        tag = stations[i]
        assert tag is not None, "stopover without a station tag"
        if i == j:
            events[i] = StopEvent.ARRIVAL_AND_DEPARTURE
        else:
            events[i] = StopEvent.ARRIVAL
            events[j] = StopEvent.DEPARTURE
        visits.append(
            StationVisit(
                station_id=tag.station_id,
                direction=tag.direction,
                arrival_ts=trip[i].timestamp,
                departure_ts=trip[j].timestamp,
                tuple_indices=tuple(range(i, j + 1)),
            )
        )
        i = j + 1
    return events, visits


def tag_origin_destination(n: int) -> list[TripPosition]:
    """Step 7: first tuple origin, last destination, interior 1-based index.

    A single-tuple trip gets only origin; callers report it as degenerate.
    """
    if n == 0:
        return []
    if n == 1:
        return [ORIGIN]
    return [ORIGIN, *range(1, n - 1), DESTINATION]


@dataclass(frozen=True, slots=True)
class RouteRefs:
    """Reference artifacts for one route, all sharing one local frame."""

    route_id: str
    frame: LocalFrame
    grid: RouteBufferGrid
    station_index: ZoneIndex
    intersection_index: ZoneIndex
    midpoint: RouteMidpoint


class ReferenceData:
    """Immutable per-route spatial artifacts, built once and shared.

    Each route gets a frame anchored at its first polyline vertex; zones,
    grid, and midpoint are all expressed in that frame. Safe to share
    read-only across worker processes.
    """

    def __init__(
        self,
        bundle: GtfsBundle,
        geometries: dict[str, RouteGeometry],
        roads: Sequence[RoadLine] = (),
        zone_radius_m: float = schema.ZONE_RADIUS_M,
        grid_cell_m: float = schema.GRID_CELL_M,
        buffer_half_width_m: float = schema.BUFFER_HALF_WIDTH_M,
    ):
        self.bundle = bundle
        self.zone_radius_m = zone_radius_m
        intersections = derive_intersections(list(roads), radius_m=zone_radius_m)
        self.intersections: list[CircularZone] = intersections
        self._routes: dict[str, RouteRefs] = {}
        for route_id in sorted(geometries):
            geometry = geometries[route_id]
            if len(geometry.points) < 2:
                raise GeometryError(f"route {route_id}: polyline needs >= 2 points")
            frame = LocalFrame.centered_on(*geometry.points[0])
            station_ids = [s.station_id for s in bundle.stations_for_route(route_id)]
            zones = build_station_zones(bundle, zone_radius_m, station_ids=station_ids)
            self._routes[route_id] = RouteRefs(
                route_id=route_id,
                frame=frame,
                grid=build_route_buffer_grid(geometry, frame, grid_cell_m, buffer_half_width_m),
                station_index=ZoneIndex(zones, frame),
                intersection_index=ZoneIndex(intersections, frame),
                midpoint=route_midpoint(geometry, frame),
            )

    @property
    def route_ids(self) -> list[str]:
        return sorted(self._routes)

    def for_route(self, route_id: str) -> RouteRefs:
        refs = self._routes.get(route_id)
        if refs is None:
            raise UnknownRouteError(f"route {route_id!r} absent from reference data")
        return refs


@dataclass(frozen=True, slots=True)
class TripContext:
    """contextualize_trip output: enriched tuples plus the visit table."""

    key: TripKey
    tuples: tuple[ContextTuple, ...]
    visits: tuple[StationVisit, ...]
    degenerate: bool  # single-tuple trip: origin without destination


def contextualize_trip(
    key: TripKey,
    trip: Sequence[RawTuple],
    ref: ReferenceData,
    threshold_m: float = schema.STOP_MOVE_THRESHOLD_M,
) -> TripContext:
    """Run Steps 1-7 over one cleaned, timestamp-sorted trip."""
    if not trip:
        return TripContext(key=key, tuples=(), visits=(), degenerate=False)
    refs = ref.for_route(key.route_id)
    xy = project_trip(trip, refs.frame)
    motions = detect_stop_move(trip, refs.frame, threshold_m, xy=xy)
    activities = classify_activity(trip, motions, refs.station_index, xy=xy)
    streets = annotate_street(trip, refs.grid, xy=xy)
    stations = identify_station(
        trip, activities, refs.station_index, refs.midpoint, ref.zone_radius_m, xy=xy
    )
    crossings = identify_intersection(trip, refs.intersection_index, xy=xy)
    events, visits = compute_arrival_departure(trip, activities, stations)
    positions = tag_origin_destination(len(trip))
    out = tuple(
        ContextTuple(
            base=trip[i],
            a18_motion=motions[i],
            a19_activity=activities[i],
            a20_street=streets[i],
            a21_station=stations[i],
            a22_intersection=crossings[i],
            a23_event=events[i],
            a24_trip_position=positions[i],
        )
        for i in range(len(trip))
    )
    return TripContext(key=key, tuples=out, visits=tuple(visits), degenerate=len(trip) == 1)
