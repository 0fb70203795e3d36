"""Reading and writing feed tuples as NDJSON and CSV.

The wire format is one object (or CSV row) per tuple with exactly the 17
schema attributes. Timestamps are accepted as epoch seconds or ISO-8601 and
stored canonically as UTC epoch seconds. Store files add a ``_seq`` field
(ingest sequence) and ``_late`` when a tuple arrived past allowed lateness;
both are stripped on the public surfaces.
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, TextIO

from .errors import TransitFlowError
from .model import ContextTuple, RawTuple


class MalformedRecordError(TransitFlowError):
    """A record cannot be turned into a tuple (unusable timestamp)."""


def parse_timestamp(value) -> int:
    """Normalize an epoch number or ISO-8601 string to UTC epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if math.isnan(value) or math.isinf(value):
            raise MalformedRecordError(f"non-finite timestamp {value!r}")
        return int(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return int(float(text))
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
        except ValueError:
            raise MalformedRecordError(f"unparseable timestamp {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)  # naive times are taken as UTC
        return int(dt.timestamp())
    raise MalformedRecordError(f"unparseable timestamp {value!r}")


def _parse_coord(value) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        return math.nan
    return out


def tuple_from_record(record: dict, seq: int = -1) -> RawTuple:
    """Build a RawTuple from a decoded wire record.

    Descriptor attributes are carried as opaque text, including unknown
    extras (cleaning strips them later). Bad lat/lng become NaN so cleaning
    can delete the tuple; a missing or unusable timestamp raises, because
    such a record cannot even be windowed.
    """
    if "timestamp" not in record or record["timestamp"] in (None, ""):
        raise MalformedRecordError("record has no timestamp")
    ts = parse_timestamp(record["timestamp"])
    descriptors: dict[str, str] = {}
    for name, value in record.items():
        if name in ("lat", "lng", "timestamp") or name.startswith("_"):
            continue
        if value is None:
            continue
        descriptors[name] = value if isinstance(value, str) else str(value)
    return RawTuple(
        descriptors=descriptors,
        lat=_parse_coord(record.get("lat")),
        lng=_parse_coord(record.get("lng")),
        timestamp=ts,
        seq=seq,
        late=bool(record.get("_late", False)),
    )


def record_from_tuple(t: RawTuple, include_store_fields: bool = False) -> dict:
    record: dict = dict(t.descriptors)
    record["lat"] = t.lat
    record["lng"] = t.lng
    record["timestamp"] = t.timestamp
    if include_store_fields:
        record["_seq"] = t.seq
        if t.late:
            record["_late"] = True
    return record


def dumps_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def read_ndjson_records(path: str | Path) -> Iterator[dict]:
    """Yield decoded records from an NDJSON file, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def read_csv_records(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            yield {k: v for k, v in row.items() if k is not None}


def read_records(path: str | Path) -> Iterator[dict]:
    """Decoded wire records; .csv dispatches to the CSV reader, else NDJSON."""
    if str(path).endswith(".csv"):
        return read_csv_records(path)
    return read_ndjson_records(path)


def read_ndjson_tuples(path: str | Path) -> Iterator[RawTuple]:
    """Yield tuples from an NDJSON file; seq numbers follow line order."""
    with open(path, "r", encoding="utf-8") as fh:
        yield from iter_ndjson_tuples(fh)


def iter_ndjson_tuples(fh: TextIO) -> Iterator[RawTuple]:
    seq = 0
    for line in fh:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        stored_seq = record.get("_seq")
        yield tuple_from_record(record, seq=stored_seq if stored_seq is not None else seq)
        seq += 1


def read_csv_tuples(path: str | Path) -> Iterator[RawTuple]:
    """Yield tuples from a CSV file whose header names the 17 attributes."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for seq, row in enumerate(csv.DictReader(fh)):
            yield tuple_from_record({k: v for k, v in row.items() if k is not None}, seq=seq)


def read_tuples(path: str | Path) -> Iterator[RawTuple]:
    """Dispatch on extension: .csv goes through the CSV reader, else NDJSON."""
    if str(path).endswith(".csv"):
        return read_csv_tuples(path)
    return read_ndjson_tuples(path)


def write_ndjson_tuples(path: str | Path, tuples: Iterable[RawTuple]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for t in tuples:
            fh.write(dumps_record(record_from_tuple(t)) + "\n")
            n += 1
    return n


def context_record(ct: ContextTuple) -> dict:
    """Output record: the 17 input fields plus a18..a24."""
    record = record_from_tuple(ct.base)
    record["a18_motion"] = ct.a18_motion.value
    record["a19_activity"] = ct.a19_activity.value
    record["a20_street"] = ct.a20_street
    record["a21_station"] = (
        None
        if ct.a21_station is None
        else {"id": ct.a21_station.station_id, "direction": ct.a21_station.direction.value}
    )
    record["a22_intersection"] = ct.a22_intersection
    record["a23_event"] = ct.a23_event.value
    record["a24_trip_position"] = ct.a24_trip_position
    return record
