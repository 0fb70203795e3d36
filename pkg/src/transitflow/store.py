"""Append-only tuple store with time-range queries.

Layout: a directory holding ``tuples.ndjson`` (one record per line, in
ingest order, each carrying its ingest sequence number) and ``index.json``,
a small sidecar with counts and the observed timestamp span. Appends only
ever add complete lines, so a reader always sees a consistent prefix of the
log while a single writer keeps appending.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable

from .errors import StoreWriteError
from .model import RawTuple
from .serde import dumps_record, read_ndjson_tuples, record_from_tuple

LOG_NAME = "tuples.ndjson"
INDEX_NAME = "index.json"


class TupleStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / LOG_NAME
        self.index_path = self.directory / INDEX_NAME
        self._fh = None
        self._count = 0
        self._min_ts: int | None = None
        self._max_ts: int | None = None
        self._load_index()

    def _load_index(self) -> None:
        if self.index_path.exists():
            meta = json.loads(self.index_path.read_text(encoding="utf-8"))
            self._count = meta.get("count", 0)
            self._min_ts = meta.get("min_timestamp")
            self._max_ts = meta.get("max_timestamp")
        elif self.log_path.exists():
            # Recover from the log when the sidecar is missing or stale.
            for t in read_ndjson_tuples(self.log_path):
                self._observe(t.timestamp)

    def _observe(self, ts: int) -> None:
        self._count += 1
        self._min_ts = ts if self._min_ts is None else min(self._min_ts, ts)
        self._max_ts = ts if self._max_ts is None else max(self._max_ts, ts)

    @property
    def count(self) -> int:
        return self._count

    def append(self, t: RawTuple) -> RawTuple:
        """Persist one tuple, stamping the next ingest sequence number."""
        stamped = RawTuple(
            descriptors=t.descriptors,
            lat=t.lat,
            lng=t.lng,
            timestamp=t.timestamp,
            seq=self._count,
            late=t.late,
        )
        try:
            if self._fh is None:
                self._fh = open(self.log_path, "a", encoding="utf-8")
            self._fh.write(dumps_record(record_from_tuple(stamped, include_store_fields=True)) + "\n")
        except OSError as exc:
            raise StoreWriteError(f"cannot append to {self.log_path}: {exc}") from exc
        self._observe(stamped.timestamp)
        return stamped

    def extend(self, tuples: Iterable[RawTuple]) -> int:
        n = 0
        for t in tuples:
            self.append(t)
            n += 1
        return n

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
        self._write_index()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None
        self._write_index()

    def _write_index(self) -> None:
        meta = {
            "count": self._count,
            "min_timestamp": self._min_ts,
            "max_timestamp": self._max_ts,
        }
        try:
            self.index_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        except OSError as exc:
            raise StoreWriteError(f"cannot write {self.index_path}: {exc}") from exc

    def load(self) -> list[RawTuple]:
        """All tuples in append order (empty if nothing was written yet)."""
        if self._fh is not None:
            self._fh.flush()  # read-your-writes within one process
        if not self.log_path.exists():
            return []
        return list(read_ndjson_tuples(self.log_path))

    def query_range(self, from_ts: int, to_ts: int) -> list[RawTuple]:
        """Tuples with from_ts <= timestamp < to_ts, ordered by (timestamp, seq)."""
        hits = [t for t in self.load() if from_ts <= t.timestamp < to_ts]
        hits.sort(key=lambda t: (t.timestamp, t.seq))
        return hits

    def __enter__(self) -> "TupleStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
