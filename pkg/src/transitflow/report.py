"""Tabular reports over a pipeline run directory.

A run directory (as written by the engine) is summarized into four
sections: cleaning counts, per-trip activity-class counts, phase timings,
and the station-visit table. The same report dict renders to JSON, CSV,
or Markdown; the CSV is a flat (section, record, field, value) table so
that every number in the JSON appears verbatim in the CSV.
"""

from __future__ import annotations

import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path

from .errors import RunArtifactError
from .model import ActivityClass

ACTIVITY_CLASSES = tuple(c.value for c in ActivityClass)

_RUN_FILES = ("run_report.json", "timings.json", "context.ndjson", "station_visits.ndjson")


def load_run(run_dir: str | Path) -> dict:
    """Collect a report dict from run artifacts.

    Raises RunArtifactError when any expected artifact is missing.
    """
    run = Path(run_dir)
    missing = [name for name in _RUN_FILES if not (run / name).exists()]
    if missing:
        raise RunArtifactError(f"run directory {run} is missing {', '.join(missing)}")
    run_report = json.loads((run / "run_report.json").read_text(encoding="utf-8"))
    timings = json.loads((run / "timings.json").read_text(encoding="utf-8"))

    per_trip: dict[tuple[str, str, str], dict[str, int]] = {}
    totals = {name: 0 for name in ACTIVITY_CLASSES}
    n_context = 0
    with open(run / "context.ndjson", "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            date = datetime.fromtimestamp(rec["timestamp"], tz=timezone.utc).date()
            key = (rec["route_id_vlr"], rec["trip_id_tta"], date.isoformat())
            row = per_trip.get(key)
            if row is None:
                row = per_trip[key] = {name: 0 for name in ACTIVITY_CLASSES}
            row[rec["a19_activity"]] += 1
            totals[rec["a19_activity"]] += 1
            n_context += 1

    trip_rows = []
    for (route_id, trip_id, service_date), counts in sorted(per_trip.items()):
        row = {"route_id": route_id, "trip_id": trip_id, "service_date": service_date}
        row.update(counts)
        row["total"] = sum(counts.values())
        trip_rows.append(row)

    visit_rows = []
    with open(run / "station_visits.ndjson", "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                visit_rows.append(json.loads(line))

    return {
        "run_dir": str(run),
        "cleaning": run_report["clean_report"],
        "engine": {
            "partitions": run_report["partitions"],
            "rejects": run_report["rejects"],
            "failed_jobs": len(run_report["failed_jobs"]),
            "degenerate_trips": len(run_report["degenerate_trips"]),
            "context_tuples": run_report["context_tuples"],
        },
        "activity": {
            "totals": {**totals, "tuples": n_context},
            "per_trip": trip_rows,
        },
        "timings": timings,
        "station_visits": {"total": len(visit_rows), "rows": visit_rows},
    }


def iter_cells(report: dict):
    """Yield every scalar in the report as (section, record, field, value).

    This flat view is the CSV row set, and by construction covers the same
    numbers the JSON rendering carries.
    """
    for section in ("cleaning", "engine", "timings"):
        for field, value in sorted(report[section].items()):
            yield section, "", field, value
    for field, value in sorted(report["activity"]["totals"].items()):
        yield "activity_totals", "", field, value
    for row in report["activity"]["per_trip"]:
        record = f"{row['route_id']}|{row['trip_id']}|{row['service_date']}"
        for field in (*ACTIVITY_CLASSES, "total"):
            yield "activity_per_trip", record, field, row[field]
    yield "station_visits", "", "total", report["station_visits"]["total"]
    for i, row in enumerate(report["station_visits"]["rows"]):
        for field, value in sorted(row.items()):
            yield "station_visit_rows", str(i), field, value


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["section", "record", "field", "value"])
    for section, record, field, value in iter_cells(report):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            value = json.dumps(value)  # strings, lists, nulls: one JSON cell
        writer.writerow([section, record, field, value])
    return buf.getvalue()


def _md_table(headers: list[str], rows: list[list]) -> list[str]:
    out = ["| " + " | ".join(headers) + " |",
           "| " + " | ".join("---" for _ in headers) + " |"]
    for row in rows:
        out.append("| " + " | ".join(str(v) for v in row) + " |")
    return out


def to_markdown(report: dict) -> str:
    lines = ["# Pipeline run report", "", f"Run directory: `{report['run_dir']}`", ""]

    lines += ["## Cleaning", ""]
    cleaning_rows = [[k, v] for k, v in sorted(report["cleaning"].items())]
    lines += _md_table(["count", "value"], cleaning_rows) + [""]

    lines += ["## Engine", ""]
    lines += _md_table(["count", "value"], [[k, v] for k, v in sorted(report["engine"].items())]) + [""]

    lines += ["## Activity classes", ""]
    totals = report["activity"]["totals"]
    lines += _md_table(["class", "tuples"], [[k, totals[k]] for k in (*ACTIVITY_CLASSES, "tuples")]) + [""]
    per_trip = report["activity"]["per_trip"]
    if per_trip:
        headers = ["route_id", "trip_id", "service_date", *ACTIVITY_CLASSES, "total"]
        lines += _md_table(headers, [[row[h] for h in headers] for row in per_trip]) + [""]

    lines += ["## Phase timings", ""]
    lines += _md_table(["phase", "value"], [[k, v] for k, v in sorted(report["timings"].items())]) + [""]

    lines += ["## Station visits", ""]
    lines.append(f"Total visits: {report['station_visits']['total']}")
    lines.append("")
    rows = report["station_visits"]["rows"]
    if rows:
        headers = ["route_id", "trip_id", "service_date", "station_id", "direction",
                   "arrival", "departure", "first_index", "last_index"]
        lines += _md_table(headers, [[row[h] for h in headers] for row in rows]) + [""]
    return "\n".join(lines) + "\n"


FORMATTERS = {"json": to_json, "csv": to_csv, "md": to_markdown}


def render(report: dict, fmt: str) -> str:
    try:
        formatter = FORMATTERS[fmt]
    except KeyError:
        raise ValueError(f"unknown report format: {fmt!r}") from None
    return formatter(report)
