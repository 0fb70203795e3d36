"""Five-step cleaning pass over a tuple stream.

Order of operations: per-tuple attribute repair (fill N/A, delete
unrepairable, strip extras, standardize values), then per-trip
deduplication by timestamp, then missing-tuple gap analysis, then
sparse-trip dropping. Repair runs first so duplicates with broken
attributes repair identically and dedup sees them as equal; gaps are
counted but never imputed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from . import schema
from .model import RawTuple, TripKey


@dataclass(slots=True)
class CleanReport:
    input_total: int = 0
    output_total: int = 0
    missing_tuples: int = 0
    trips_dropped: int = 0
    sparse_tuples_dropped: int = 0
    duplicates_removed: int = 0
    duplicate_conflicts: int = 0
    values_set_na: int = 0
    tuples_deleted: int = 0
    attributes_stripped: int = 0
    values_standardized: int = 0
    dropped_trip_keys: list[str] = field(default_factory=list)

    def conservation_holds(self) -> bool:
        return (
            self.input_total
            - self.duplicates_removed
            - self.tuples_deleted
            - self.sparse_tuples_dropped
            == self.output_total
        )

    def mutation_counts(self) -> dict[str, int]:
        """Counts that change tuples; zero on a second pass over clean data."""
        return {
            "trips_dropped": self.trips_dropped,
            "sparse_tuples_dropped": self.sparse_tuples_dropped,
            "duplicates_removed": self.duplicates_removed,
            "values_set_na": self.values_set_na,
            "tuples_deleted": self.tuples_deleted,
            "attributes_stripped": self.attributes_stripped,
            "values_standardized": self.values_standardized,
        }

    def to_dict(self) -> dict:
        return {
            "input_total": self.input_total,
            "output_total": self.output_total,
            "missing_tuples": self.missing_tuples,
            "trips_dropped": self.trips_dropped,
            "sparse_tuples_dropped": self.sparse_tuples_dropped,
            "duplicates_removed": self.duplicates_removed,
            "duplicate_conflicts": self.duplicate_conflicts,
            "values_set_na": self.values_set_na,
            "tuples_deleted": self.tuples_deleted,
            "attributes_stripped": self.attributes_stripped,
            "values_standardized": self.values_standardized,
            "dropped_trip_keys": sorted(self.dropped_trip_keys),
        }


def detect_missing(trip: list[RawTuple], cadence_s: int = schema.CADENCE_S) -> tuple[int, list[dict]]:
    """Count tuples missing from a trip's cadence timeline.

    For each consecutive gap dt, round(dt/cadence) - 1 tuples are missing
    when dt exceeds 1.5 cadences (jitter guard). Requires timestamp order.
    """
    total = 0
    gaps: list[dict] = []
    for prev, cur in zip(trip, trip[1:]):
        dt = cur.timestamp - prev.timestamp
        if dt > 1.5 * cadence_s:
            missing = round(dt / cadence_s) - 1
            if missing > 0:
                total += missing
                gaps.append({"after": prev.timestamp, "until": cur.timestamp, "missing": missing})
    return total, gaps


def drop_sparse_trips(
    trips: dict[TripKey, list[RawTuple]],
    missing_counts: dict[TripKey, int],
    threshold: int = schema.SPARSE_TRIP_THRESHOLD,
) -> tuple[dict[TripKey, list[RawTuple]], list[TripKey]]:
    """Remove trips whose total missing count reaches the threshold."""
    dropped = [k for k in trips if missing_counts.get(k, 0) >= threshold]
    kept = {k: v for k, v in trips.items() if missing_counts.get(k, 0) < threshold}
    return kept, sorted(dropped)


def dedup(trip: Iterable[RawTuple]) -> tuple[list[RawTuple], int, int]:
    """Keep one tuple per timestamp: the smallest ingest sequence number.

    Returns (survivors sorted by timestamp, removed count, conflict count).
    A removed duplicate whose coordinates differ from the final survivor's
    is a conflict: still removed, but counted rather than silently merged.
    Conflicts are judged against the final survivor so the count does not
    depend on arrival order.
    """
    by_ts: dict[int, RawTuple] = {}
    removed_coords: dict[int, list[tuple[float, float]]] = {}
    removed = 0
    for t in trip:
        prev = by_ts.get(t.timestamp)
        if prev is None:
            by_ts[t.timestamp] = t
            continue
        removed += 1
        keep, lose = (prev, t) if prev.seq <= t.seq else (t, prev)
        by_ts[t.timestamp] = keep
        removed_coords.setdefault(t.timestamp, []).append((lose.lat, lose.lng))
    conflicts = sum(
        1
        for ts, coords in removed_coords.items()
        for c in coords
        if c != (by_ts[ts].lat, by_ts[ts].lng)
    )
    survivors = [by_ts[ts] for ts in sorted(by_ts)]
    return survivors, removed, conflicts


@dataclass(frozen=True, slots=True)
class RepairOutcome:
    tuple: RawTuple | None  # None means delete
    values_set_na: int = 0
    attributes_stripped: int = 0
    values_standardized: int = 0


def _standardize(name: str, value: str, table: dict) -> tuple[str | None, bool]:
    """Return (standardized value | None if invalid, changed flag)."""
    out = " ".join(value.split())  # trim + collapse whitespace
    rules = table.get(name, {})
    aliases = rules.get("aliases", {})
    folded = {str(k).casefold(): str(v) for k, v in aliases.items()}
    if out.casefold() in folded:
        out = folded[out.casefold()]
    valid = rules.get("valid")
    if valid is not None and out not in valid:
        return None, False
    return out, out != value


def repair_attributes(t: RawTuple, canonicalization: dict | None = None) -> RepairOutcome:
    """Apply the per-tuple attribute rules; never raises, returns a verdict.

    Missing non-essential descriptors are filled with N/A; a missing
    essential attribute (keying descriptors or coordinates) deletes the
    tuple. Descriptors outside the 14-name schema are stripped. Values are
    standardized through the canonicalization table; a value the table
    declares invalid with no alias falls back to the missing-value rule.
    """
    table = canonicalization or {}
    if math.isnan(t.lat) or math.isnan(t.lng):
        return RepairOutcome(tuple=None)
    if not (-90.0 <= t.lat <= 90.0 and -180.0 <= t.lng <= 180.0):
        return RepairOutcome(tuple=None)

    na = 0
    standardized = 0
    out: dict[str, str] = {}
    for name in schema.DESCRIPTOR_NAMES:
        value = t.descriptors.get(name)
        if value is not None and value.strip() != "" and value != schema.NA_VALUE:
            fixed, changed = _standardize(name, value, table)
            if fixed is not None:
                out[name] = fixed
                if changed:
                    standardized += 1
                continue
        if name in schema.ESSENTIAL_DESCRIPTORS:
            return RepairOutcome(tuple=None)
        out[name] = schema.NA_VALUE
        if value != schema.NA_VALUE:
            na += 1
    stripped = sum(1 for name in t.descriptors if name not in schema.DESCRIPTOR_NAMES)

    if out == t.descriptors and stripped == 0:
        return RepairOutcome(tuple=t, values_set_na=na, values_standardized=standardized)
    repaired = RawTuple(
        descriptors=out, lat=t.lat, lng=t.lng, timestamp=t.timestamp, seq=t.seq, late=t.late
    )
    return RepairOutcome(
        tuple=repaired,
        values_set_na=na,
        attributes_stripped=stripped,
        values_standardized=standardized,
    )


def clean_dataset(
    tuples: Iterable[RawTuple],
    canonicalization: dict | None = None,
    cadence_s: int = schema.CADENCE_S,
    sparse_threshold: int = schema.SPARSE_TRIP_THRESHOLD,
) -> tuple[dict[TripKey, list[RawTuple]], CleanReport]:
    """Run the full cleaning pass over a tuple stream.

    Single streaming pass for repair + grouping + dedup (memory scales with
    surviving tuples, not arrivals), then gap analysis and sparse-trip
    dropping per trip. Output trips are keyed and timestamp-sorted.
    """
    report = CleanReport()
    groups: dict[TripKey, dict[int, RawTuple]] = {}
    removed_coords: dict[TripKey, dict[int, list[tuple[float, float]]]] = {}
    for raw in tuples:
        report.input_total += 1
        outcome = repair_attributes(raw, canonicalization)
        report.values_set_na += outcome.values_set_na
        report.attributes_stripped += outcome.attributes_stripped
        report.values_standardized += outcome.values_standardized
        t = outcome.tuple
        if t is None:
            report.tuples_deleted += 1
            continue
        try:
            key = t.trip_key()
        except KeyError:
            report.tuples_deleted += 1
            continue
        by_ts = groups.setdefault(key, {})
        prev = by_ts.get(t.timestamp)
        if prev is None:
            by_ts[t.timestamp] = t
            continue
        report.duplicates_removed += 1
        keep, lose = (prev, t) if prev.seq <= t.seq else (t, prev)
        by_ts[t.timestamp] = keep
        removed_coords.setdefault(key, {}).setdefault(t.timestamp, []).append((lose.lat, lose.lng))

    # Conflicts compare removed duplicates against the final survivor so the
    # count is invariant under arrival-order permutation.
    for key, per_ts in removed_coords.items():
        by_ts = groups[key]
        for ts, coords in per_ts.items():
            survivor = (by_ts[ts].lat, by_ts[ts].lng)
            report.duplicate_conflicts += sum(1 for c in coords if c != survivor)

    trips: dict[TripKey, list[RawTuple]] = {
        key: [by_ts[ts] for ts in sorted(by_ts)] for key, by_ts in sorted(groups.items())
    }
    missing_counts: dict[TripKey, int] = {}
    for key, trip in trips.items():
        count, _ = detect_missing(trip, cadence_s)
        missing_counts[key] = count
        report.missing_tuples += count

    kept, dropped = drop_sparse_trips(trips, missing_counts, sparse_threshold)
    report.trips_dropped = len(dropped)
    report.sparse_tuples_dropped = sum(len(trips[k]) for k in dropped)
    report.dropped_trip_keys = [str(k) for k in dropped]
    report.output_total = sum(len(v) for v in kept.values())
    return kept, report
