"""Wire formats: timestamp parsing, NDJSON/CSV round trips, output records."""

import csv
import json
import math

import pytest
from hypothesis import given, strategies as st

from transitflow.model import (
    ActivityClass,
    ContextTuple,
    Direction,
    MotionLabel,
    StationTag,
    StopEvent,
)
from transitflow.serde import (
    MalformedRecordError,
    context_record,
    parse_timestamp,
    read_csv_tuples,
    read_ndjson_tuples,
    read_tuples,
    record_from_tuple,
    tuple_from_record,
    write_ndjson_tuples,
)
from transitflow.synth import make_descriptors

T0 = 1_700_000_000


def make_record(ts=T0, **extra) -> dict:
    rec = dict(make_descriptors("r1", "t1", "v1", ts, ts + 3600))
    rec.update({"lat": 46.06, "lng": -64.78, "timestamp": ts})
    rec.update(extra)
    return rec


def test_parse_timestamp_epoch_forms():
    assert parse_timestamp(T0) == T0
    assert parse_timestamp(float(T0)) == T0
    assert parse_timestamp(str(T0)) == T0
    assert parse_timestamp(f"  {T0}.0 ") == T0


def test_parse_timestamp_iso_forms():
    assert parse_timestamp("2023-11-14T22:13:20Z") == T0
    assert parse_timestamp("2023-11-14T22:13:20+00:00") == T0
    assert parse_timestamp("2023-11-14T18:13:20-04:00") == T0
    # Naive ISO strings are taken as UTC.
    assert parse_timestamp("2023-11-14T22:13:20") == T0


def test_parse_timestamp_rejects_garbage():
    for bad in ("soon", "", math.nan, math.inf, True):
        with pytest.raises(MalformedRecordError):
            parse_timestamp(bad)


def test_tuple_from_record_carries_descriptors():
    t = tuple_from_record(make_record(), seq=4)
    assert t.timestamp == T0 and t.seq == 4
    assert t.lat == 46.06 and t.lng == -64.78
    assert t.descriptors["route_id_vlr"] == "r1"
    assert len(t.descriptors) == 14


def test_tuple_from_record_keeps_unknown_extras():
    """Unknown attributes ride along as text; cleaning strips them later."""
    t = tuple_from_record(make_record(operator_note="check brakes", axle_count=3))
    assert t.descriptors["operator_note"] == "check brakes"
    assert t.descriptors["axle_count"] == "3"


def test_tuple_from_record_bad_coords_become_nan():
    t = tuple_from_record(make_record(lat="north-ish", lng=None))
    assert math.isnan(t.lat) and math.isnan(t.lng)


def test_tuple_from_record_requires_timestamp():
    rec = make_record()
    del rec["timestamp"]
    with pytest.raises(MalformedRecordError):
        tuple_from_record(rec)
    with pytest.raises(MalformedRecordError):
        tuple_from_record(make_record(timestamp=None))


def test_record_round_trip():
    t = tuple_from_record(make_record(), seq=7)
    assert tuple_from_record(record_from_tuple(t)) == t


def test_store_fields_round_trip_and_strip():
    t = tuple_from_record(make_record(_seq=5, _late=True))
    assert t.seq == -1  # explicit seq argument wins over absent default
    stored = record_from_tuple(t, include_store_fields=True)
    assert stored["_late"] is True
    public = record_from_tuple(t)
    assert "_seq" not in public and "_late" not in public


def test_ndjson_round_trip(tmp_path):
    tuples = [tuple_from_record(make_record(ts=T0 + 5 * i), seq=i) for i in range(10)]
    path = tmp_path / "feed.ndjson"
    assert write_ndjson_tuples(path, tuples) == 10
    back = list(read_ndjson_tuples(path))
    assert back == tuples
    assert [t.seq for t in back] == list(range(10))


def test_ndjson_reader_skips_blank_lines(tmp_path):
    path = tmp_path / "feed.ndjson"
    line = json.dumps(make_record())
    path.write_text(f"{line}\n\n{line}\n", encoding="utf-8")
    assert len(list(read_ndjson_tuples(path))) == 2


def test_csv_reader_matches_ndjson(tmp_path):
    records = [make_record(ts=T0 + 5 * i) for i in range(5)]
    csv_path = tmp_path / "feed.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(records[0]))
        writer.writeheader()
        writer.writerows(records)
    nd_path = tmp_path / "feed.ndjson"
    nd_path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    from_csv = list(read_tuples(csv_path))
    from_nd = list(read_tuples(nd_path))
    assert [t.descriptors for t in from_csv] == [t.descriptors for t in from_nd]
    assert [t.timestamp for t in from_csv] == [t.timestamp for t in from_nd]


@given(st.integers(min_value=0, max_value=4_000_000_000))
def test_timestamp_epoch_identity(ts):
    assert parse_timestamp(ts) == ts


def test_context_record_shape():
    base = tuple_from_record(make_record())
    ct = ContextTuple(
        base=base,
        a18_motion=MotionLabel.STOP,
        a19_activity=ActivityClass.STOPOVER,
        a20_street="Main St",
        a21_station=StationTag("s1", Direction.OUTBOUND),
        a22_intersection="Main St x Oak Ave",
        a23_event=StopEvent.ARRIVAL,
        a24_trip_position=2,
    )
    rec = context_record(ct)
    assert rec["a18_motion"] == "stop"
    assert rec["a19_activity"] == "stopover"
    assert rec["a21_station"] == {"id": "s1", "direction": "outbound"}
    assert rec["a23_event"] == "arrival"
    assert rec["a24_trip_position"] == 2
    assert len([k for k in rec if k.startswith("a")]) >= 7
    # All 17 input fields survive alongside the seven annotations.
    assert rec["route_id_vlr"] == "r1" and rec["timestamp"] == T0
    assert len(rec) == 17 + 7


def test_context_record_null_station():
    base = tuple_from_record(make_record())
    ct = ContextTuple(
        base=base,
        a18_motion=MotionLabel.MOVE,
        a19_activity=ActivityClass.RUNNING,
        a20_street="wrong street segment",
        a21_station=None,
        a22_intersection=None,
        a23_event=StopEvent.NONE,
        a24_trip_position="origin",
    )
    rec = context_record(ct)
    assert rec["a21_station"] is None and rec["a22_intersection"] is None
    assert json.loads(json.dumps(rec))["a21_station"] is None
