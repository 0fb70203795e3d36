"""Schedule loading: the four-file subset, validation, and route lookups."""

import pytest

from transitflow.errors import GtfsLoadError, GtfsValidationError
from transitflow.gtfs import (
    GtfsBundle,
    Route,
    Station,
    StopTime,
    Trip,
    load_gtfs,
    write_gtfs,
)


def minimal_bundle() -> GtfsBundle:
    stations = {
        "s1": Station("s1", "First & Main", 46.06, -64.78),
        "s2": Station("s2", "Second & Main", 46.07, -64.78),
    }
    routes = {"r1": Route("r1", "Route 1")}
    trips = {"t1": Trip("t1", "r1", direction="0")}
    stop_times = (
        StopTime("t1", "s1", "08:00:00", "08:00:30", 1),
        StopTime("t1", "s2", "08:05:00", "08:05:30", 2),
    )
    return GtfsBundle(stations, routes, trips, stop_times)


def big_bundle(n_routes=30, n_stations=642) -> GtfsBundle:
    """A synthetic feed sized like a mid-size transit authority export."""
    stations = {
        f"s{i:04d}": Station(f"s{i:04d}", f"Stop {i}", 46.0 + i * 1e-4, -64.78)
        for i in range(n_stations)
    }
    routes = {f"r{j}": Route(f"r{j}", f"Route {j}") for j in range(n_routes)}
    trips = {f"t{j}": Trip(f"t{j}", f"r{j}") for j in range(n_routes)}
    ids = sorted(stations)
    per_route = n_stations // n_routes
    stop_times = []
    for j in range(n_routes):
        chunk = ids[j * per_route:(j + 1) * per_route] or ids[:2]
        stop_times.extend(
            StopTime(f"t{j}", sid, "", "", k + 1) for k, sid in enumerate(chunk)
        )
    return GtfsBundle(stations, routes, trips, tuple(stop_times))


def test_round_trip_preserves_counts(tmp_path):
    bundle = minimal_bundle()
    write_gtfs(bundle, tmp_path)
    loaded = load_gtfs(tmp_path)
    assert loaded.counts() == {"stations": 2, "routes": 1, "trips": 1, "stop_times": 2}
    assert loaded == bundle


def test_counts_echo_feed_size(tmp_path):
    """A 30-route, 642-station feed reports exactly those counts on load."""
    write_gtfs(big_bundle(), tmp_path)
    counts = load_gtfs(tmp_path).counts()
    assert counts["routes"] == 30
    assert counts["stations"] == 642


def test_stations_for_route_follows_schedule_order(tmp_path):
    bundle = minimal_bundle()
    write_gtfs(bundle, tmp_path)
    loaded = load_gtfs(tmp_path)
    assert [s.station_id for s in loaded.stations_for_route("r1")] == ["s1", "s2"]


def test_stations_for_route_first_appearance_wins():
    """A station visited twice on a loop appears once, at its first slot."""
    bundle = minimal_bundle()
    looped = GtfsBundle(
        bundle.stations,
        bundle.routes,
        bundle.trips,
        bundle.stop_times + (StopTime("t1", "s1", "08:10:00", "08:10:30", 3),),
    )
    assert [s.station_id for s in looped.stations_for_route("r1")] == ["s1", "s2"]


def test_stations_for_route_falls_back_to_all_stations():
    """A route with no stop_times still gets zone candidates."""
    bundle = minimal_bundle()
    extra = GtfsBundle(
        bundle.stations,
        {**bundle.routes, "r9": Route("r9", "Route 9")},
        bundle.trips,
        bundle.stop_times,
    )
    assert [s.station_id for s in extra.stations_for_route("r9")] == ["s1", "s2"]


def test_dangling_stop_time_trip_rejected(tmp_path):
    bundle = minimal_bundle()
    broken = GtfsBundle(
        bundle.stations,
        bundle.routes,
        bundle.trips,
        bundle.stop_times + (StopTime("ghost", "s1", "", "", 1),),
    )
    write_gtfs(broken, tmp_path)
    with pytest.raises(GtfsValidationError) as exc:
        load_gtfs(tmp_path)
    assert "ghost" in str(exc.value)


def test_dangling_trip_route_rejected(tmp_path):
    bundle = minimal_bundle()
    broken = GtfsBundle(
        bundle.stations,
        bundle.routes,
        {**bundle.trips, "t9": Trip("t9", "no-such-route")},
        bundle.stop_times,
    )
    write_gtfs(broken, tmp_path)
    with pytest.raises(GtfsValidationError) as exc:
        load_gtfs(tmp_path)
    assert "no-such-route" in str(exc.value)


def test_dangling_stop_time_station_rejected():
    bundle = minimal_bundle()
    broken = GtfsBundle(
        bundle.stations,
        bundle.routes,
        bundle.trips,
        bundle.stop_times + (StopTime("t1", "s404", "", "", 3),),
    )
    with pytest.raises(GtfsValidationError) as exc:
        broken.validate()
    assert "s404" in str(exc.value)


def test_missing_file_rejected(tmp_path):
    write_gtfs(minimal_bundle(), tmp_path)
    (tmp_path / "stop_times.txt").unlink()
    with pytest.raises(GtfsLoadError) as exc:
        load_gtfs(tmp_path)
    assert "stop_times.txt" in str(exc.value)


def test_missing_directory_rejected(tmp_path):
    with pytest.raises(GtfsLoadError):
        load_gtfs(tmp_path / "no_such_dir")


def test_missing_columns_rejected(tmp_path):
    write_gtfs(minimal_bundle(), tmp_path)
    (tmp_path / "stops.txt").write_text("stop_id,stop_name\ns1,First\n", encoding="utf-8")
    with pytest.raises(GtfsLoadError) as exc:
        load_gtfs(tmp_path)
    assert "stop_lat" in str(exc.value)


def test_bad_coordinates_rejected(tmp_path):
    write_gtfs(minimal_bundle(), tmp_path)
    (tmp_path / "stops.txt").write_text(
        "stop_id,stop_name,stop_lat,stop_lon\ns1,First,north,-64.78\n", encoding="utf-8"
    )
    with pytest.raises(GtfsLoadError):
        load_gtfs(tmp_path)


def test_bad_stop_sequence_rejected(tmp_path):
    write_gtfs(minimal_bundle(), tmp_path)
    (tmp_path / "stop_times.txt").write_text(
        "trip_id,stop_id,arrival_time,departure_time,stop_sequence\nt1,s1,,,first\n",
        encoding="utf-8",
    )
    with pytest.raises(GtfsLoadError):
        load_gtfs(tmp_path)


def test_optional_files_ignored(tmp_path):
    write_gtfs(minimal_bundle(), tmp_path)
    (tmp_path / "calendar.txt").write_text("service_id\nweekday\n", encoding="utf-8")
    assert load_gtfs(tmp_path).counts()["stations"] == 2
