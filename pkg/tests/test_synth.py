"""Synthetic feeds: exact defect bookkeeping and reproducibility."""

from __future__ import annotations

import json

import pytest

from transitflow import schema
from transitflow.cleaning import clean_dataset
from transitflow.errors import ConfigError
from transitflow.geo import LocalFrame
from transitflow.synth import (
    BASE_LAT,
    BASE_LNG,
    CorpusSpec,
    DefectProfile,
    GroundTruth,
    TripSpec,
    build_corpus,
    build_network,
    generate_synthetic,
    generate_trip,
    make_descriptors,
    plan_corpus,
    stream_from_config,
)

T0 = 1_700_000_000


def schedule_of(*lengths: int, route_id="r01") -> list[TripSpec]:
    return [
        TripSpec(
            trip_id=f"t{i + 1}",
            route_id=route_id,
            vehicle_id=f"v{i + 1}",
            start_ts=T0 + i * 7200,
            length=length,
        )
        for i, length in enumerate(lengths)
    ]


def test_descriptors_are_complete():
    desc = make_descriptors("r07", "t1", "v9", T0, T0 + 55)
    assert len(desc) == len(schema.DESCRIPTOR_NAMES) == 14
    assert set(desc) == set(schema.DESCRIPTOR_NAMES)
    assert all(isinstance(v, str) and v for v in desc.values())
    assert desc["route_id_vlr"] == "r07"
    assert desc["route_name"] == "Route 07"
    assert desc["trip_start"] == "2023-11-14T22:13:20Z"


def test_generate_trip_walks_cadence_and_gaps(network):
    frame = LocalFrame.centered_on(BASE_LAT, BASE_LNG)
    spec = TripSpec("t1", "r01", "v1", T0, length=5, step_m=20.0)
    trip = generate_trip(network.geometries["r01"], frame, spec, gaps={1: 2})
    # Two slots go silent after tuple 1; position keeps moving through them.
    assert [t.timestamp - T0 for t in trip] == [0, 5, 20, 25, 30]
    assert trip[0].descriptors["trip_finish"] == trip[-1].descriptors["trip_finish"]
    assert trip[0].descriptors["trip_finish"].endswith("Z")
    xs = [frame.to_xy(t.lat, t.lng)[0] for t in trip]
    assert xs == pytest.approx([0.0, 20.0, 80.0, 100.0, 120.0], abs=1e-6)


def test_zero_profile_emits_clean_stream(network):
    emitted, truth = generate_synthetic(network.geometries, schedule_of(30, 30))
    assert len(emitted) == 60
    assert truth.emitted == truth.base_tuples == truth.expected_output == 60
    assert truth.duplicates == 0 and truth.duplicate_positions == []
    assert truth.missing_total == 0 and truth.gap_count == 0
    assert truth.sparse_trip_keys == [] and truth.sparse_tuples == 0
    assert truth.values_set_na == truth.tuples_deleted == 0
    assert truth.attributes_stripped == truth.values_standardized == 0
    stamps = [t.timestamp for t in emitted]
    assert stamps == sorted(stamps)
    seen = {(t.timestamp, t.descriptors["trip_id_tta"]) for t in emitted}
    assert len(seen) == 60


def test_exact_duplicate_injection(network):
    profile = DefectProfile(seed=5, duplicates=10)
    emitted, truth = generate_synthetic(
        network.geometries, schedule_of(500, 500), profile
    )
    assert len(emitted) == 1010
    assert truth.duplicates == len(truth.duplicate_positions) == 10
    for pos in truth.duplicate_positions:
        assert emitted[pos] == emitted[pos - 1]
    keys = [(t.timestamp, t.descriptors["trip_id_tta"]) for t in emitted]
    assert len(keys) - len(set(keys)) == 10


def test_duplicate_rate_resolves_to_count(network):
    profile = DefectProfile(seed=5, duplicate_rate=0.01)
    _, truth = generate_synthetic(network.geometries, schedule_of(400, 600), profile)
    assert truth.duplicates == 10


def test_gap_injection_marks_trip_sparse(network):
    profile = DefectProfile(gap_injections=((0, 50, 100),))
    emitted, truth = generate_synthetic(
        network.geometries, schedule_of(120, 120), profile
    )
    assert truth.missing_total == 100 and truth.gap_count == 1
    assert truth.sparse_trip_keys == ["r01|t1|2023-11-14"]
    assert truth.sparse_tuples == 120
    assert truth.expected_output == 240 - 120
    _, report = clean_dataset(emitted)
    assert report.to_dict() == truth.expected_clean_counts()


def test_gap_injection_validation(network):
    with pytest.raises(ConfigError):
        generate_synthetic(
            network.geometries,
            schedule_of(10),
            DefectProfile(gap_injections=((0, 9, 3),)),
        )
    with pytest.raises(ConfigError):
        generate_synthetic(
            network.geometries,
            schedule_of(10),
            DefectProfile(gap_injections=((4, 2, 3),)),
        )
    with pytest.raises(ConfigError):
        DefectProfile(gap_injections=((0, 2, 0),)).validate()
    with pytest.raises(ConfigError):
        DefectProfile(duplicates=-1).validate()
    with pytest.raises(ConfigError):
        DefectProfile(duplicate_rate=1.5).validate()


def test_attribute_defects_need_interior_tuples(network):
    # A 4-tuple trip has 2 interior tuples; 5 defects cannot be placed.
    with pytest.raises(ConfigError):
        generate_synthetic(
            network.geometries,
            schedule_of(4),
            DefectProfile(missing_nonessential=5),
        )


def test_ground_truth_round_trips(network, tmp_path):
    profile = DefectProfile(seed=2, duplicates=4, gap_injections=((1, 10, 2),))
    _, truth = generate_synthetic(network.geometries, schedule_of(40, 40), profile)
    truth.save(tmp_path / "truth.json")
    assert GroundTruth.load(tmp_path / "truth.json") == truth


def test_corpus_is_seed_reproducible(tmp_path):
    spec = CorpusSpec(total=5000, seed=11)
    paths_a, truth_a = build_corpus(spec, tmp_path / "a")
    paths_b, truth_b = build_corpus(spec, tmp_path / "b")
    assert truth_a == truth_b
    for name in ("corpus", "ground_truth", "geometry", "canonicalization", "meta"):
        assert paths_a[name].read_bytes() == paths_b[name].read_bytes(), name


def test_corpus_stream_matches_its_ground_truth(small_corpus):
    """Brute-force scan of the emitted feed against the recorded inventory."""
    paths, truth, _ = small_corpus
    lines = paths["corpus"].read_text(encoding="utf-8").splitlines()
    assert len(lines) == truth.emitted == 10_000
    adjacent_dups = sum(1 for a, b in zip(lines, lines[1:]) if a == b)
    assert adjacent_dups == truth.duplicates
    missing_essential = set_na = stripped = standardized = 0
    for line in lines:
        rec = json.loads(line)
        desc = set(rec) - {"lat", "lng", "timestamp", "_seq", "_late"}
        if not set(schema.ESSENTIAL_DESCRIPTORS) <= desc:
            missing_essential += 1
        elif len(desc & set(schema.DESCRIPTOR_NAMES)) == 13:
            set_na += 1
        if any(k.startswith("debug_field_") for k in desc):
            stripped += 1
        if rec.get("route_name", "") != rec.get("route_name", "").strip():
            standardized += 1
    # Defects target non-duplicated tuples, so raw occurrence counts match.
    assert missing_essential == truth.tuples_deleted
    assert set_na == truth.values_set_na
    assert stripped == truth.attributes_stripped
    assert standardized == truth.values_standardized
    assert (
        truth.expected_output
        == truth.emitted - truth.duplicates - truth.tuples_deleted - truth.sparse_tuples
    )


def test_infeasible_ratio_plans_raise():
    with pytest.raises(ConfigError, match="infeasible ratios"):
        plan_corpus(CorpusSpec(total=3))
    with pytest.raises(ConfigError, match="single-tuple sparse"):
        plan_corpus(CorpusSpec(total=136))
    with pytest.raises(ConfigError, match="duplicate_ratio"):
        plan_corpus(CorpusSpec(total=1000, duplicate_ratio=1.5))


def test_corpus_trips_never_cross_midnight(small_corpus):
    paths, _, _ = small_corpus
    meta = json.loads(paths["meta"].read_text(encoding="utf-8"))
    assert meta["spec"]["total"] == 10_000
    days = set()
    for line in paths["corpus"].read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        if "trip_id_tta" in rec:
            days.add((rec["trip_id_tta"], int(rec["timestamp"]) // 86_400))
    trips = {trip for trip, _ in days}
    assert len(days) == len(trips)


def test_stream_from_config_shapes_and_defects():
    stream, truth = stream_from_config(
        {"routes": 1, "trips": 2, "trip_length": 10, "seed": 0}
    )
    assert len(stream) == truth.emitted == 20
    by_trip: dict[str, list[int]] = {}
    for t in stream:
        by_trip.setdefault(t.descriptors["trip_id_tta"], []).append(t.timestamp)
    assert len(by_trip) == 2
    for stamps in by_trip.values():
        assert [b - a for a, b in zip(stamps, stamps[1:])] == [5] * 9

    stream, _ = stream_from_config({"duration_s": 50, "cadence_s": 5})
    assert len(stream) == 10

    _, truth = stream_from_config({"trips": 1, "trip_length": 30, "defects": {"duplicates": 3}})
    assert truth.duplicates == 3

    with pytest.raises(ConfigError, match="unknown synth config keys"):
        stream_from_config({"trip_len": 10})
    with pytest.raises(ConfigError, match="bad defects object"):
        stream_from_config({"defects": {"dups": 1}})
    with pytest.raises(ConfigError):
        stream_from_config({"trips": 0})


def test_network_shape():
    network = build_network(n_routes=2)
    assert sorted(network.geometries) == ["r01", "r02"]
    geom = network.geometries["r01"]
    assert len(geom.points) == 11 and len(geom.street_names) == 10
    stations = network.bundle.stations_for_route("r01")
    assert len(stations) == 8
    assert [s.station_id for s in stations] == sorted(
        (s.station_id for s in stations),
        key=lambda sid: int(sid[3:]),
    )
    assert network.roads


def test_fixture_self_checks(classification_fixture, detour_fixture):
    for fx in (classification_fixture, detour_fixture):
        n = len(fx.trip)
        assert len(fx.motions) == len(fx.activities) == n
        assert 0 <= fx.midpoint_split <= n
        assert all(0 <= i < n for i in fx.intersection_indexes)
        assert all(0 <= i < n for i in fx.offroute_indexes)
        last_end = -1
        for station_id, direction, first, last in fx.expected_visits:
            assert station_id in fx.bundle.stations
            assert direction in ("outbound", "return")
            assert last_end < first <= last < n
            last_end = last
        assert fx.geometry.route_id == fx.route_id
    assert len(classification_fixture.trip) == 518
    assert detour_fixture.offroute_indexes
