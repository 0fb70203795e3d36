"""Minimal GTFS subset: stops, routes, trips, stop_times.

Only the four files the contextualizer needs are parsed; optional GTFS
files are ignored. Referential integrity across the four files is checked
on load and reported with the offending ids.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import GtfsLoadError, GtfsValidationError

STOPS_FILE = "stops.txt"
ROUTES_FILE = "routes.txt"
TRIPS_FILE = "trips.txt"
STOP_TIMES_FILE = "stop_times.txt"


@dataclass(frozen=True, slots=True)
class Station:
    station_id: str
    name: str
    lat: float
    lng: float


@dataclass(frozen=True, slots=True)
class Route:
    route_id: str
    name: str


@dataclass(frozen=True, slots=True)
class Trip:
    trip_id: str
    route_id: str
    direction: str = ""


@dataclass(frozen=True, slots=True)
class StopTime:
    trip_id: str
    station_id: str
    arrival: str
    departure: str
    sequence: int


@dataclass(frozen=True, slots=True)
class GtfsBundle:
    stations: dict[str, Station]
    routes: dict[str, Route]
    trips: dict[str, Trip]
    stop_times: tuple[StopTime, ...] = field(default_factory=tuple)

    def counts(self) -> dict[str, int]:
        return {
            "stations": len(self.stations),
            "routes": len(self.routes),
            "trips": len(self.trips),
            "stop_times": len(self.stop_times),
        }

    def stations_for_route(self, route_id: str) -> list[Station]:
        """Stations scheduled on a route, in first-appearance order.

        Routes without any scheduled stop times fall back to the full
        station set, so zone building always has candidates.
        """
        trip_ids = {t.trip_id for t in self.trips.values() if t.route_id == route_id}
        seen: dict[str, None] = {}
        for st in sorted(self.stop_times, key=lambda s: (s.trip_id, s.sequence)):
            if st.trip_id in trip_ids and st.station_id not in seen:
                seen[st.station_id] = None
        if not seen:
            return [self.stations[sid] for sid in sorted(self.stations)]
        return [self.stations[sid] for sid in seen]

    def validate(self) -> None:
        bad_trip_routes = sorted(
            {t.route_id for t in self.trips.values() if t.route_id not in self.routes}
        )
        if bad_trip_routes:
            raise GtfsValidationError(
                "trips reference unknown routes", offending_ids=bad_trip_routes
            )
        bad_st_trips = sorted(
            {st.trip_id for st in self.stop_times if st.trip_id not in self.trips}
        )
        if bad_st_trips:
            raise GtfsValidationError(
                "stop_times reference unknown trips", offending_ids=bad_st_trips
            )
        bad_st_stations = sorted(
            {st.station_id for st in self.stop_times if st.station_id not in self.stations}
        )
        if bad_st_stations:
            raise GtfsValidationError(
                "stop_times reference unknown stations", offending_ids=bad_st_stations
            )


def _read_rows(directory: Path, filename: str, required: tuple[str, ...]) -> list[dict]:
    path = directory / filename
    if not path.exists():
        raise GtfsLoadError(f"missing GTFS file: {path}")
    with open(path, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise GtfsLoadError(f"{path} lacks required columns: {', '.join(missing)}")
        return [row for row in reader]


def load_gtfs(directory: str | Path) -> GtfsBundle:
    """Parse the four-file subset and validate cross-references."""
    directory = Path(directory)
    if not directory.is_dir():
        raise GtfsLoadError(f"GTFS directory not found: {directory}")

    stations: dict[str, Station] = {}
    for row in _read_rows(directory, STOPS_FILE, ("stop_id", "stop_lat", "stop_lon")):
        try:
            lat, lng = float(row["stop_lat"]), float(row["stop_lon"])
        except ValueError as exc:
            raise GtfsLoadError(f"bad coordinates for stop {row['stop_id']!r}: {exc}") from exc
        stations[row["stop_id"]] = Station(
            station_id=row["stop_id"],
            name=row.get("stop_name", "") or "",
            lat=lat,
            lng=lng,
        )

    routes: dict[str, Route] = {}
    for row in _read_rows(directory, ROUTES_FILE, ("route_id",)):
        name = row.get("route_long_name") or row.get("route_short_name") or ""
        routes[row["route_id"]] = Route(route_id=row["route_id"], name=name)

    trips: dict[str, Trip] = {}
    for row in _read_rows(directory, TRIPS_FILE, ("trip_id", "route_id")):
        trips[row["trip_id"]] = Trip(
            trip_id=row["trip_id"],
            route_id=row["route_id"],
            direction=row.get("direction_id", "") or "",
        )

    stop_times = []
    for row in _read_rows(directory, STOP_TIMES_FILE, ("trip_id", "stop_id", "stop_sequence")):
        try:
            seq = int(row["stop_sequence"])
        except ValueError as exc:
            raise GtfsLoadError(f"bad stop_sequence in {STOP_TIMES_FILE}: {exc}") from exc
        stop_times.append(
            StopTime(
                trip_id=row["trip_id"],
                station_id=row["stop_id"],
                arrival=row.get("arrival_time", "") or "",
                departure=row.get("departure_time", "") or "",
                sequence=seq,
            )
        )

    bundle = GtfsBundle(
        stations=stations, routes=routes, trips=trips, stop_times=tuple(stop_times)
    )
    bundle.validate()
    return bundle


def write_gtfs(bundle: GtfsBundle, directory: str | Path) -> None:
    """Emit the four-file subset (used by the synthetic corpus builder)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    def _write(filename: str, header: list[str], rows: list[list]) -> None:
        with open(directory / filename, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    _write(
        STOPS_FILE,
        ["stop_id", "stop_name", "stop_lat", "stop_lon"],
        [[s.station_id, s.name, repr(s.lat), repr(s.lng)] for s in
         sorted(bundle.stations.values(), key=lambda s: s.station_id)],
    )
    _write(
        ROUTES_FILE,
        ["route_id", "route_long_name"],
        [[r.route_id, r.name] for r in sorted(bundle.routes.values(), key=lambda r: r.route_id)],
    )
    _write(
        TRIPS_FILE,
        ["trip_id", "route_id", "direction_id"],
        [[t.trip_id, t.route_id, t.direction] for t in
         sorted(bundle.trips.values(), key=lambda t: t.trip_id)],
    )
    _write(
        STOP_TIMES_FILE,
        ["trip_id", "stop_id", "arrival_time", "departure_time", "stop_sequence"],
        [[st.trip_id, st.station_id, st.arrival, st.departure, st.sequence]
         for st in sorted(bundle.stop_times, key=lambda s: (s.trip_id, s.sequence))],
    )
