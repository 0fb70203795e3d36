"""Shared domain types: feed tuples, partition keys, and context labels."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date, datetime, timezone

from . import schema


class MotionLabel(str, enum.Enum):
    STOP = "stop"
    MOVE = "move"


class ActivityClass(str, enum.Enum):
    RUNNING = "running"
    PASSING = "passing"
    SUSPENSION = "suspension_of_movement"
    STOPOVER = "stopover"


class Direction(str, enum.Enum):
    OUTBOUND = "outbound"
    RETURN = "return"


class StopEvent(str, enum.Enum):
    ARRIVAL = "arrival"
    DEPARTURE = "departure"
    ARRIVAL_AND_DEPARTURE = "arrival_and_departure"
    NONE = "none"


# a24 value: "origin", "destination", or a 1-based interior sequence index.
TripPosition = str | int

ORIGIN = "origin"
DESTINATION = "destination"


@dataclass(frozen=True, slots=True)
class RawTuple:
    """One GPS report: the 14 descriptor attributes plus position and time.

    ``descriptors`` maps attribute name to text value, in wire order. On
    ingest it may deviate from the 14-name schema (missing, extra or broken
    attributes); cleaning restores it to exactly the schema names.

    ``seq`` is the ingest sequence number, assigned by the source or store.
    It breaks ties deterministically (deduplication, sort stability) and is
    excluded from equality so that a retransmitted tuple compares equal to
    the original.
    """

    descriptors: dict[str, str]
    lat: float
    lng: float
    timestamp: int  # UTC epoch seconds
    seq: int = field(default=-1, compare=False)
    late: bool = field(default=False, compare=False)

    def get(self, name: str) -> str | None:
        return self.descriptors.get(name)

    def service_date(self) -> date:
        return datetime.fromtimestamp(self.timestamp, tz=timezone.utc).date()

    def trip_key(self) -> "TripKey":
        """Partition key; raises KeyError if a keying descriptor is absent."""
        route = self.descriptors[schema.ROUTE_KEY_ATTR]
        trip = self.descriptors[schema.TRIP_KEY_ATTR]
        if not route or not trip:
            raise KeyError("empty keying descriptor")
        return TripKey(route, trip, self.service_date())


@dataclass(frozen=True, slots=True, order=True)
class TripKey:
    """Partition key: one vehicle trip on one route on one service date.

    Field-wise equality; the derived lexicographic order makes shuffle
    output deterministic.
    """

    route_id: str
    trip_id: str
    service_date: date

    def __post_init__(self) -> None:
        if not self.route_id or not self.trip_id:
            raise ValueError("TripKey fields must be non-empty")

    def __str__(self) -> str:
        return f"{self.route_id}|{self.trip_id}|{self.service_date.isoformat()}"


@dataclass(frozen=True, slots=True)
class StationTag:
    """Station id plus travel direction, the a21 annotation."""

    station_id: str
    direction: Direction


@dataclass(frozen=True, slots=True)
class ContextTuple:
    """A cleaned tuple enriched with the seven mobility-context attributes."""

    base: RawTuple
    a18_motion: MotionLabel
    a19_activity: ActivityClass
    a20_street: str
    a21_station: StationTag | None
    a22_intersection: str | None
    a23_event: StopEvent
    a24_trip_position: TripPosition

    def validate(self) -> None:
        """Raise ValueError on any single-tuple invariant breach."""
        stop_like = self.a18_motion is MotionLabel.STOP
        if self.a19_activity in (ActivityClass.RUNNING, ActivityClass.PASSING):
            if stop_like:
                raise ValueError(f"{self.a19_activity.value} attached to a stop tuple")
        elif not stop_like:
            raise ValueError(f"{self.a19_activity.value} attached to a move tuple")
        at_station = self.a19_activity in (ActivityClass.STOPOVER, ActivityClass.PASSING)
        if (self.a21_station is not None) != at_station:
            raise ValueError("a21_station must be set exactly on stopover/passing tuples")
        if self.a23_event is not StopEvent.NONE and self.a19_activity is not ActivityClass.STOPOVER:
            raise ValueError("arrival/departure events only occur on stopovers")
