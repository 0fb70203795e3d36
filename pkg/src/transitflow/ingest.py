"""Stream ingestion: sources, event-time windows, and the ingest loop.

Feeds report on a fixed cadence, so arriving tuples are bucketed into
epoch-aligned event-time windows whose width equals that cadence. Window
membership is a pure function of the event timestamp, never of arrival
time, which keeps replay and live ingestion byte-equivalent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from . import schema
from .errors import SourceReadError, StoreWriteError
from .model import RawTuple
from .serde import MalformedRecordError, read_records, tuple_from_record
from .store import TupleStore


def window_start(ts: int, width_s: int = schema.WINDOW_S) -> int:
    """Start of the epoch-aligned window containing an event timestamp."""
    return ts - ts % width_s


@dataclass(frozen=True, slots=True)
class EventWindow:
    """Half-open event-time interval [start, end) and its member tuples."""

    start: int
    end: int
    tuples: tuple[RawTuple, ...]


def group_into_windows(tuples: Iterable[RawTuple], width_s: int = schema.WINDOW_S) -> list[EventWindow]:
    """Bucket tuples by event time into width_s windows, sorted by start."""
    buckets: dict[int, list[RawTuple]] = {}
    for t in tuples:
        buckets.setdefault(window_start(t.timestamp, width_s), []).append(t)
    return [
        EventWindow(start=s, end=s + width_s, tuples=tuple(buckets[s]))
        for s in sorted(buckets)
    ]


class ReplaySource:
    """Replays a recorded NDJSON or CSV feed file.

    rate="max_speed" yields as fast as possible; rate="real_time" sleeps to
    honor inter-tuple event-time deltas scaled by ``speedup``. Clock and
    sleep are injectable so tests never wait on wall time. Records whose
    timestamp cannot be parsed are counted in ``skipped`` and passed over.
    """

    def __init__(
        self,
        path: str | Path,
        rate: str = "max_speed",
        speedup: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if rate not in ("max_speed", "real_time"):
            raise ValueError(f"unknown rate policy {rate!r}")
        self.path = Path(path)
        # A file that is not there can never become readable by retrying.
        if not self.path.is_file():
            raise SourceReadError(f"replay source is not a readable file: {self.path}")
        self.rate = rate
        self.speedup = speedup
        self.sleep = sleep
        self.skipped = 0

    def __iter__(self) -> Iterator[RawTuple]:
        last_ts: int | None = None
        seq = 0
        try:
            # Conversion happens per record, outside the file generator, so
            # one unusable record never kills the rest of the replay.
            for record in read_records(self.path):
                stored_seq = record.get("_seq")
                try:
                    t = tuple_from_record(record, seq=stored_seq if stored_seq is not None else seq)
                except MalformedRecordError:
                    self.skipped += 1
                    continue
                finally:
                    seq += 1
                if self.rate == "real_time" and last_ts is not None and t.timestamp > last_ts:
                    self.sleep((t.timestamp - last_ts) / self.speedup)
                last_ts = t.timestamp
                yield t
        except OSError as exc:
            raise SourceReadError(f"cannot read {self.path}: {exc}") from exc


class GeneratorSource:
    """Wraps any tuple iterable (e.g. synthetic feed output) as a source."""

    def __init__(self, tuples: Iterable[RawTuple]):
        self._tuples = tuples

    def __iter__(self) -> Iterator[RawTuple]:
        yield from self._tuples


@dataclass(slots=True)
class IngestSummary:
    tuples: int = 0
    windows: int = 0
    late: int = 0
    skipped: int = 0
    gaps: list[dict] = field(default_factory=list)
    aborted: bool = False
    abort_reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "tuples": self.tuples,
            "windows": self.windows,
            "late": self.late,
            "skipped": self.skipped,
            "gaps": self.gaps,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }


def ingest_loop(
    source: Iterable[RawTuple],
    store: TupleStore,
    stop_condition: Callable[[IngestSummary], bool] | None = None,
    *,
    window_s: int = schema.WINDOW_S,
    allowed_lateness_s: int = schema.ALLOWED_LATENESS_S,
    real_time: bool = False,
    max_retries: int = 3,
    backoff_s: float = 0.05,
    sleep: Callable[[float], None] = time.sleep,
) -> IngestSummary:
    """Drain a source into a store, one append per emitted tuple.

    Transient source read failures are retried with linear backoff up to
    max_retries; a gap record is logged when retries are exhausted and the
    loop moves on. A store write failure aborts (partial progress stays
    persisted and is reported). In real-time mode a tuple whose event time
    lags the watermark by more than allowed_lateness_s is flagged late but
    still stored; in replay mode event order is taken as given.
    """
    summary = IngestSummary()
    seen_windows: set[int] = set()
    watermark: int | None = None
    it = iter(source)
    consecutive_gaps = 0
    while True:
        t: RawTuple | None = None
        exhausted = False
        attempts = 0
        while True:
            try:
                t = next(it)
                break
            except StopIteration:
                break
            except SourceReadError as exc:
                attempts += 1
                if attempts > max_retries:
                    summary.gaps.append({"after_tuple": summary.tuples, "error": str(exc)})
                    exhausted = True
                    break
                sleep(backoff_s * attempts)
        if exhausted:
            consecutive_gaps += 1
            if consecutive_gaps >= 2:
                break  # two gap rounds in a row: the source is gone
            continue
        if t is None:
            break  # source drained normally
        consecutive_gaps = 0
        if real_time and watermark is not None and t.timestamp < watermark - allowed_lateness_s:
            t = RawTuple(
                descriptors=t.descriptors,
                lat=t.lat,
                lng=t.lng,
                timestamp=t.timestamp,
                seq=t.seq,
                late=True,
            )
            summary.late += 1
        watermark = t.timestamp if watermark is None else max(watermark, t.timestamp)
        try:
            store.append(t)
        except StoreWriteError as exc:
            summary.aborted = True
            summary.abort_reason = str(exc)
            break
        summary.tuples += 1
        seen_windows.add(window_start(t.timestamp, window_s))
        summary.windows = len(seen_windows)
        if stop_condition is not None and stop_condition(summary):
            break
    if hasattr(source, "skipped"):
        summary.skipped = source.skipped
    store.flush()
    return summary
