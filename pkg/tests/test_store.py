"""Append-only store: sequencing, persistence, recovery, range queries."""

import json

import pytest

from transitflow.errors import StoreWriteError
from transitflow.serde import tuple_from_record
from transitflow.store import TupleStore
from transitflow.synth import make_descriptors

T0 = 1_700_000_000


def make_tuple(ts=T0, trip="t1"):
    rec = dict(make_descriptors("r1", trip, "v1", ts, ts + 3600))
    rec.update({"lat": 46.06, "lng": -64.78, "timestamp": ts})
    return tuple_from_record(rec)


def test_append_stamps_sequential_seq(tmp_path):
    with TupleStore(tmp_path / "store") as store:
        stamped = [store.append(make_tuple(T0 + i)) for i in range(5)]
    assert [t.seq for t in stamped] == [0, 1, 2, 3, 4]


def test_load_returns_append_order(tmp_path):
    tuples = [make_tuple(T0 + 5 * i) for i in (3, 1, 2, 0)]
    with TupleStore(tmp_path / "store") as store:
        store.extend(tuples)
    back = TupleStore(tmp_path / "store").load()
    assert back == tuples
    assert [t.seq for t in back] == [0, 1, 2, 3]


def test_count_survives_reopen(tmp_path):
    path = tmp_path / "store"
    with TupleStore(path) as store:
        store.extend(make_tuple(T0 + i) for i in range(7))
    reopened = TupleStore(path)
    assert reopened.count == 7
    reopened.append(make_tuple(T0 + 99))
    assert reopened.load()[-1].seq == 7
    reopened.close()


def test_index_sidecar_records_span(tmp_path):
    path = tmp_path / "store"
    with TupleStore(path) as store:
        store.extend([make_tuple(T0 + 50), make_tuple(T0), make_tuple(T0 + 10)])
    meta = json.loads((path / "index.json").read_text(encoding="utf-8"))
    assert meta == {"count": 3, "min_timestamp": T0, "max_timestamp": T0 + 50}


def test_recovery_from_log_without_sidecar(tmp_path):
    path = tmp_path / "store"
    with TupleStore(path) as store:
        store.extend(make_tuple(T0 + i) for i in range(4))
    (path / "index.json").unlink()
    recovered = TupleStore(path)
    assert recovered.count == 4
    assert recovered.append(make_tuple(T0 + 4)).seq == 4


def test_empty_store_loads_empty(tmp_path):
    store = TupleStore(tmp_path / "fresh")
    assert store.count == 0
    assert store.load() == []
    assert store.query_range(0, 10**10) == []


def test_query_range_is_half_open(tmp_path):
    with TupleStore(tmp_path / "store") as store:
        store.extend(make_tuple(ts) for ts in (T0, T0 + 5, T0 + 10))
        hits = store.query_range(T0, T0 + 10)
    assert [t.timestamp for t in hits] == [T0, T0 + 5]


def test_query_range_orders_by_time_then_seq(tmp_path):
    """Out-of-order appends come back time-sorted; ties keep ingest order."""
    with TupleStore(tmp_path / "store") as store:
        store.extend([
            make_tuple(T0 + 10, trip="a"),
            make_tuple(T0, trip="b"),
            make_tuple(T0 + 10, trip="c"),
            make_tuple(T0 + 5, trip="d"),
        ])
        hits = store.query_range(T0, T0 + 11)
    trips = [t.descriptors["trip_id_tta"] for t in hits]
    assert trips == ["b", "d", "a", "c"]
    assert [t.seq for t in hits] == [1, 3, 0, 2]


def test_append_failure_raises_store_error(tmp_path):
    store = TupleStore(tmp_path / "store")
    store.append(make_tuple())
    store.close()
    store.log_path.unlink()
    store.log_path.mkdir()  # open-for-append now fails regardless of uid
    with pytest.raises(StoreWriteError):
        store.append(make_tuple(T0 + 5))
