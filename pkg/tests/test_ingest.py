"""Ingestion: event-time windows, replay pacing, retries, and lateness."""

import json

import pytest

from transitflow.errors import SourceReadError, StoreWriteError
from transitflow.ingest import (
    EventWindow,
    GeneratorSource,
    ReplaySource,
    group_into_windows,
    ingest_loop,
    window_start,
)
from transitflow.serde import tuple_from_record
from transitflow.store import TupleStore
from transitflow.synth import TripSpec, build_network, generate_trip, make_descriptors

T0 = 1_700_000_000  # multiple of the 5 s window width


def make_tuple(ts=T0, trip="t1"):
    rec = dict(make_descriptors("r1", trip, "v1", ts, ts + 3600))
    rec.update({"lat": 46.06, "lng": -64.78, "timestamp": ts})
    return tuple_from_record(rec)


def write_feed(path, tuples):
    from transitflow.serde import write_ndjson_tuples

    write_ndjson_tuples(path, tuples)
    return path


class FlakyIterator:
    """Yields scripted tuples, raising transient read errors on demand."""

    def __init__(self, tuples, failures_before_each=0, fail_forever=False):
        self._tuples = list(tuples)
        self._idx = 0
        self._budget = failures_before_each
        self._remaining = failures_before_each
        self.fail_forever = fail_forever

    def __iter__(self):
        return self

    def __next__(self):
        if self.fail_forever:
            raise SourceReadError("link down")
        if self._remaining > 0:
            self._remaining -= 1
            raise SourceReadError("transient read failure")
        if self._idx >= len(self._tuples):
            raise StopIteration
        t = self._tuples[self._idx]
        self._idx += 1
        self._remaining = self._budget
        return t


class BrokenStore:
    """Store stub whose append fails after a scripted number of writes."""

    def __init__(self, fail_after):
        self.fail_after = fail_after
        self.written = []

    def append(self, t):
        if len(self.written) >= self.fail_after:
            raise StoreWriteError("disk full")
        self.written.append(t)
        return t

    def flush(self):
        pass


def test_window_start_is_epoch_aligned():
    assert window_start(T0) == T0
    assert window_start(T0 + 1) == T0
    assert window_start(T0 + 4) == T0
    assert window_start(T0 + 5) == T0 + 5
    assert window_start(T0 + 7, width_s=5) == T0 + 5


def test_group_into_windows_example():
    """Tuples at t, t+7, t+1 split into [t, t+5) x2 and [t+5, t+10) x1."""
    ts = [T0, T0 + 7, T0 + 1]
    windows = group_into_windows([make_tuple(t) for t in ts])
    assert [(w.start, w.end, len(w.tuples)) for w in windows] == [
        (T0, T0 + 5, 2),
        (T0 + 5, T0 + 10, 1),
    ]
    assert [t.timestamp for t in windows[0].tuples] == [T0, T0 + 1]


def test_group_into_windows_empty():
    assert group_into_windows([]) == []


def test_one_hour_trip_fills_720_windows():
    """At a 5 s cadence, one hour of reports lands in 720 distinct windows."""
    net = build_network(n_routes=1)
    geometry = next(iter(net.geometries.values()))
    spec = TripSpec(trip_id="t1", route_id=geometry.route_id, vehicle_id="v1",
                    start_ts=T0, length=720)
    trip = generate_trip(geometry, net.frame, spec)
    assert len(trip) == 720
    windows = group_into_windows(trip)
    assert len(windows) == 720
    assert all(len(w.tuples) == 1 for w in windows)


def test_ingest_drains_source_into_store(tmp_path):
    tuples = [make_tuple(T0 + i) for i in range(10)]
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(GeneratorSource(tuples), store)
    assert summary.tuples == 10
    assert summary.windows == 2  # [T0, T0+5) and [T0+5, T0+10)
    assert not summary.aborted
    assert TupleStore(tmp_path / "store").load() == tuples


def test_ingest_retries_transient_failures(tmp_path):
    """Two failures per read stay under max_retries: no gaps, no losses."""
    sleeps = []
    source = FlakyIterator([make_tuple(T0 + i) for i in range(3)], failures_before_each=2)
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(source, store, max_retries=3, backoff_s=0.01,
                              sleep=sleeps.append)
    assert summary.tuples == 3
    assert summary.gaps == []
    # Linear backoff: first retry waits 1x, second 2x.
    assert sleeps[:2] == [0.01, 0.02]


def test_ingest_logs_gap_and_recovers(tmp_path):
    """Retries exhausted once: a gap is recorded, then ingestion resumes."""
    source = FlakyIterator([make_tuple(T0 + i) for i in range(4)], failures_before_each=0)
    source._remaining = 5  # one burst longer than max_retries, then healthy
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(source, store, max_retries=3, backoff_s=0, sleep=lambda s: None)
    assert summary.tuples == 4
    assert len(summary.gaps) == 1
    assert summary.gaps[0]["after_tuple"] == 0
    assert not summary.aborted


def test_ingest_stops_after_two_consecutive_gap_rounds(tmp_path):
    source = FlakyIterator([], fail_forever=True)
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(source, store, max_retries=2, backoff_s=0, sleep=lambda s: None)
    assert summary.tuples == 0
    assert len(summary.gaps) == 2
    assert not summary.aborted


def test_ingest_aborts_on_store_failure():
    store = BrokenStore(fail_after=2)
    summary = ingest_loop(GeneratorSource(make_tuple(T0 + i) for i in range(5)), store)
    assert summary.aborted
    assert "disk full" in summary.abort_reason
    assert summary.tuples == 2  # progress before the failure stays counted


def test_real_time_mode_flags_late_tuples(tmp_path):
    """An event 100 s behind the watermark exceeds 60 s lateness: flagged."""
    tuples = [make_tuple(T0), make_tuple(T0 + 200), make_tuple(T0 + 100)]
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(GeneratorSource(tuples), store, real_time=True)
        stored = store.load()
    assert summary.late == 1
    assert [t.late for t in stored] == [False, False, True]
    assert stored[2].timestamp == T0 + 100  # stored, not dropped


def test_replay_mode_never_flags_late(tmp_path):
    tuples = [make_tuple(T0), make_tuple(T0 + 200), make_tuple(T0 + 100)]
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(GeneratorSource(tuples), store, real_time=False)
    assert summary.late == 0


def test_stop_condition_halts_ingestion(tmp_path):
    tuples = [make_tuple(T0 + 5 * i) for i in range(100)]
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(GeneratorSource(tuples), store,
                              stop_condition=lambda s: s.tuples >= 7)
    assert summary.tuples == 7


def test_replay_source_max_speed_never_sleeps(tmp_path):
    sleeps = []
    path = write_feed(tmp_path / "feed.ndjson", [make_tuple(T0 + 5 * i) for i in range(5)])
    source = ReplaySource(path, rate="max_speed", sleep=sleeps.append)
    assert len(list(source)) == 5
    assert sleeps == []


def test_replay_source_real_time_honors_deltas(tmp_path):
    """Sleeps equal event-time deltas divided by the speedup factor."""
    ts = [T0, T0 + 5, T0 + 5, T0 + 15]
    path = write_feed(tmp_path / "feed.ndjson", [make_tuple(t) for t in ts])
    sleeps = []
    source = ReplaySource(path, rate="real_time", speedup=5.0, sleep=sleeps.append)
    assert len(list(source)) == 4
    assert sleeps == [1.0, 2.0]


def test_replay_source_counts_unusable_records(tmp_path):
    path = tmp_path / "feed.ndjson"
    good = json.dumps({"route_id_vlr": "r1", "trip_id_tta": "t1",
                       "lat": 46.06, "lng": -64.78, "timestamp": T0})
    bad = json.dumps({"route_id_vlr": "r1", "trip_id_tta": "t1",
                      "lat": 46.06, "lng": -64.78, "timestamp": "soon"})
    path.write_text(f"{good}\n{bad}\n{good}\n", encoding="utf-8")
    source = ReplaySource(path)
    with TupleStore(tmp_path / "store") as store:
        summary = ingest_loop(source, store)
    assert summary.tuples == 2
    assert summary.skipped == 1


def test_replay_source_missing_file_raises():
    with pytest.raises(SourceReadError, match="not a readable file"):
        ReplaySource("/nonexistent/feed.ndjson")


def test_replay_source_rejects_unknown_rate(tmp_path):
    with pytest.raises(ValueError):
        ReplaySource(tmp_path / "feed.ndjson", rate="warp")


def test_window_dataclass_is_frozen():
    w = EventWindow(start=T0, end=T0 + 5, tuples=(make_tuple(),))
    with pytest.raises(AttributeError):
        w.start = 0
