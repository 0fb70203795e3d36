"""Keyed map/shuffle/reduce execution over cleaned trips.

Map extracts a (route, trip, service date) key per tuple, shuffle groups
and sorts deterministically, and reduce runs per-trip contextualization --
optionally across a pool of forked worker processes. Output order is fixed
by the TripKey total order and workers serialize their own partitions, so
results are byte-identical no matter the worker count or scheduling.
"""

from __future__ import annotations

import json
import multiprocessing
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Sequence

from . import schema
from .cleaning import CleanReport, clean_dataset
from .config import EngineConfig
from .context import ReferenceData, StationVisit, contextualize_trip
from .model import RawTuple, TripKey
from .serde import context_record, dumps_record, read_ndjson_tuples, read_tuples, record_from_tuple
from .store import LOG_NAME


@dataclass(frozen=True, slots=True)
class PartitionJob:
    """One reduce unit: a trip's key and its timestamp-sorted tuples."""

    key: TripKey
    tuples: tuple[RawTuple, ...]


@dataclass(slots=True)
class PhaseTiming:
    map_s: float = 0.0
    shuffle_s: float = 0.0
    reduce_s: float = 0.0
    partitions: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return {
            "map_s": self.map_s,
            "shuffle_s": self.shuffle_s,
            "reduce_s": self.reduce_s,
            "partitions": self.partitions,
            "workers": self.workers,
        }


def map_phase(
    tuples: Iterable[RawTuple],
) -> tuple[list[tuple[TripKey, RawTuple]], list[tuple[RawTuple, str]]]:
    """Emit one (TripKey, tuple) pair per tuple; unkeyable ones are rejected.

    The key's service date comes from the tuple's own timestamp, so a trip
    crossing midnight splits into one partition per calendar date.
    """
    pairs: list[tuple[TripKey, RawTuple]] = []
    rejects: list[tuple[RawTuple, str]] = []
    for t in tuples:
        try:
            pairs.append((t.trip_key(), t))
        except (KeyError, ValueError) as exc:
            rejects.append((t, f"unkeyable tuple: {exc}"))
    return pairs, rejects


def shuffle(pairs: Iterable[tuple[TripKey, RawTuple]]) -> list[PartitionJob]:
    """Group pairs into per-key jobs, each sorted by (timestamp, seq).

    Jobs come out in TripKey order; the result is invariant under any
    permutation of the input pairs.
    """
    groups: dict[TripKey, list[RawTuple]] = {}
    for key, t in pairs:
        groups.setdefault(key, []).append(t)
    jobs: list[PartitionJob] = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda t: (t.timestamp, t.seq))
        jobs.append(PartitionJob(key=key, tuples=tuple(members)))
    return jobs


def _visit_record(key: TripKey, visit: StationVisit) -> dict:
    # Visit members are a consecutive run, so the index span is lossless.
    return {
        "route_id": key.route_id,
        "trip_id": key.trip_id,
        "service_date": key.service_date.isoformat(),
        "station_id": visit.station_id,
        "direction": visit.direction.value,
        "arrival": visit.arrival_ts,
        "departure": visit.departure_ts,
        "first_index": visit.tuple_indices[0],
        "last_index": visit.tuple_indices[-1],
    }


# Reduce jobs and reference data are published here in the parent before the
# worker pool forks, so children inherit them copy-on-write and the queue
# carries only job indexes and serialized results.
_WORK: dict = {}


def _process_job(idx: int) -> tuple[int, bytes, bytes, int, int, bool, str | None]:
    job: PartitionJob = _WORK["jobs"][idx]
    try:
        tc = contextualize_trip(job.key, job.tuples, _WORK["ref"], _WORK["threshold"])
        for ct in tc.tuples:
            ct.validate()
    except Exception as exc:  # per-job isolation: any failure is reported, not fatal
        return idx, b"", b"", 0, 0, False, f"{type(exc).__name__}: {exc}"
    ctx_bytes = "".join(
        dumps_record(context_record(ct)) + "\n" for ct in tc.tuples
    ).encode("utf-8")
    visit_bytes = "".join(
        dumps_record(_visit_record(job.key, v)) + "\n" for v in tc.visits
    ).encode("utf-8")
    return idx, ctx_bytes, visit_bytes, len(tc.tuples), len(tc.visits), tc.degenerate, None


@dataclass(slots=True)
class ReduceStats:
    context_tuples: int = 0
    visits: int = 0
    failed_jobs: list[dict] = field(default_factory=list)
    degenerate_trips: list[str] = field(default_factory=list)


def reduce_phase(
    jobs: Sequence[PartitionJob],
    ref: ReferenceData,
    workers: int,
    ctx_out: BinaryIO,
    visits_out: BinaryIO,
    threshold_m: float = schema.STOP_MOVE_THRESHOLD_M,
) -> ReduceStats:
    """Contextualize every job, writing output in job (key) order.

    With workers > 1 a fork-based pool processes jobs in parallel; results
    stream back in submission order, so assembly is already deterministic.
    A failed job yields a failure record and leaves the others untouched.
    """
    stats = ReduceStats()
    _WORK["jobs"] = list(jobs)
    _WORK["ref"] = ref
    _WORK["threshold"] = threshold_m
    try:
        if workers > 1 and jobs:
            try:
                mp = multiprocessing.get_context("fork")
            except ValueError:
                mp = None  # no fork on this platform: fall back to inline
        else:
            mp = None
        if mp is not None:
            chunk = max(1, len(jobs) // (workers * 8))
            with mp.Pool(processes=workers) as pool:
                results = pool.imap(_process_job, range(len(jobs)), chunksize=chunk)
                for result in results:
                    _collect(result, jobs, stats, ctx_out, visits_out)
        else:
            for idx in range(len(jobs)):
                _collect(_process_job(idx), jobs, stats, ctx_out, visits_out)
    finally:
        _WORK.clear()
    return stats


def _collect(
    result: tuple[int, bytes, bytes, int, int, bool, str | None],
    jobs: Sequence[PartitionJob],
    stats: ReduceStats,
    ctx_out: BinaryIO,
    visits_out: BinaryIO,
) -> None:
    idx, ctx_bytes, visit_bytes, n_tuples, n_visits, degenerate, error = result
    if error is not None:
        stats.failed_jobs.append({"key": str(jobs[idx].key), "error": error})
        return
    ctx_out.write(ctx_bytes)
    visits_out.write(visit_bytes)
    stats.context_tuples += n_tuples
    stats.visits += n_visits
    if degenerate:
        stats.degenerate_trips.append(str(jobs[idx].key))


@dataclass(slots=True)
class RunResult:
    out_dir: Path
    clean_report: CleanReport
    timing: PhaseTiming
    context_tuples: int
    visits: int
    rejects: int
    failed_jobs: list[dict]
    degenerate_trips: list[str]

    @property
    def artifacts(self) -> dict[str, Path]:
        return {
            "cleaned": self.out_dir / "cleaned.ndjson",
            "context": self.out_dir / "context.ndjson",
            "station_visits": self.out_dir / "station_visits.ndjson",
            "clean_report": self.out_dir / "clean_report.json",
            "run_report": self.out_dir / "run_report.json",
            "timings": self.out_dir / "timings.json",
        }


def _iter_input(input_path: str | Path) -> Iterable[RawTuple]:
    path = Path(input_path)
    if path.is_dir():
        return read_ndjson_tuples(path / LOG_NAME)
    return read_tuples(path)


def run_pipeline(
    input_path: str | Path,
    ref: ReferenceData,
    out_dir: str | Path,
    config: EngineConfig | None = None,
    canonicalization: dict | None = None,
) -> RunResult:
    """Clean, partition, and contextualize a feed end to end.

    input_path is either a store directory or an NDJSON/CSV tuple file.
    Artifacts land in out_dir: cleaned.ndjson, context.ndjson,
    station_visits.ndjson, clean_report.json, run_report.json, and
    timings.json. Everything except timings.json is a deterministic
    function of (input, reference data, config); timings are wall-clock
    measurements and live in their own file so that reports stay
    byte-comparable across runs.
    """
    cfg = config or EngineConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing = PhaseTiming(workers=cfg.workers)

    t0 = time.perf_counter()
    trips, clean_report = clean_dataset(
        _iter_input(input_path),
        canonicalization=canonicalization,
        cadence_s=cfg.cadence_s,
        sparse_threshold=cfg.sparse_trip_threshold,
    )
    clean_s = time.perf_counter() - t0

    with open(out / "cleaned.ndjson", "w", encoding="utf-8") as fh:
        for key in sorted(trips):
            for t in trips[key]:
                fh.write(dumps_record(record_from_tuple(t)) + "\n")

    t1 = time.perf_counter()
    cleaned_stream = (t for key in sorted(trips) for t in trips[key])
    pairs, rejects = map_phase(cleaned_stream)
    timing.map_s = time.perf_counter() - t1

    t2 = time.perf_counter()
    jobs = shuffle(pairs)
    timing.shuffle_s = time.perf_counter() - t2
    timing.partitions = len(jobs)

    t3 = time.perf_counter()
    with open(out / "context.ndjson", "wb") as ctx_out, open(
        out / "station_visits.ndjson", "wb"
    ) as visits_out:
        stats = reduce_phase(
            jobs, ref, cfg.workers, ctx_out, visits_out, cfg.stop_move_threshold_m
        )
    timing.reduce_s = time.perf_counter() - t3

    if clean_report.input_total == 0:
        # Empty input: report exact zero timings rather than scheduler noise.
        clean_s = 0.0
        timing.map_s = timing.shuffle_s = timing.reduce_s = 0.0

    (out / "clean_report.json").write_text(
        json.dumps(clean_report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    # Worker count is an execution setting, not a semantic one; it is
    # recorded with the wall-clock timings so reports stay byte-stable
    # across worker counts.
    semantic_cfg = {k: v for k, v in cfg.to_dict().items() if k != "workers"}
    run_report = {
        "input": str(input_path),
        "config": semantic_cfg,
        "clean_report": clean_report.to_dict(),
        "partitions": len(jobs),
        "rejects": len(rejects),
        "failed_jobs": stats.failed_jobs,
        "degenerate_trips": stats.degenerate_trips,
        "context_tuples": stats.context_tuples,
        "station_visits": stats.visits,
        "timings_file": "timings.json",
    }
    (out / "run_report.json").write_text(
        json.dumps(run_report, indent=2) + "\n", encoding="utf-8"
    )
    total_s = time.perf_counter() - t0 if clean_report.input_total else 0.0
    timings = {"clean_s": clean_s, "total_s": total_s}
    timings.update(timing.to_dict())
    (out / "timings.json").write_text(
        json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return RunResult(
        out_dir=out,
        clean_report=clean_report,
        timing=timing,
        context_tuples=stats.context_tuples,
        visits=stats.visits,
        rejects=len(rejects),
        failed_jobs=stats.failed_jobs,
        degenerate_trips=stats.degenerate_trips,
    )


def clean_to_file(
    input_path: str | Path,
    out_file: str | Path,
    report_file: str | Path,
    config: EngineConfig | None = None,
    canonicalization: dict | None = None,
) -> CleanReport:
    """The standalone cleaning stage: cleaned NDJSON plus report JSON."""
    cfg = config or EngineConfig()
    trips, report = clean_dataset(
        _iter_input(input_path),
        canonicalization=canonicalization,
        cadence_s=cfg.cadence_s,
        sparse_threshold=cfg.sparse_trip_threshold,
    )
    with open(out_file, "w", encoding="utf-8") as fh:
        for key in sorted(trips):
            for t in trips[key]:
                fh.write(dumps_record(record_from_tuple(t)) + "\n")
    Path(report_file).write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    return report


def contextualize_file(
    in_file: str | Path,
    ref: ReferenceData,
    out_file: str | Path,
    visits_file: str | Path | None = None,
    config: EngineConfig | None = None,
) -> tuple[ReduceStats, PhaseTiming]:
    """The standalone contextualize stage over already-cleaned tuples."""
    cfg = config or EngineConfig()
    timing = PhaseTiming(workers=cfg.workers)
    t1 = time.perf_counter()
    pairs, _rejects = map_phase(read_tuples(in_file))
    timing.map_s = time.perf_counter() - t1
    t2 = time.perf_counter()
    jobs = shuffle(pairs)
    timing.shuffle_s = time.perf_counter() - t2
    timing.partitions = len(jobs)
    visits_path = Path(visits_file) if visits_file else Path(out_file).with_suffix(".visits.ndjson")
    t3 = time.perf_counter()
    with open(out_file, "wb") as ctx_out, open(visits_path, "wb") as visits_out:
        stats = reduce_phase(
            jobs, ref, cfg.workers, ctx_out, visits_out, cfg.stop_move_threshold_m
        )
    timing.reduce_s = time.perf_counter() - t3
    return stats, timing
