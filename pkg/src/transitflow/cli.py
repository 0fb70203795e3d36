"""Command-line front end.

One subcommand per stage (ingest, clean, contextualize, pipeline) plus
report emission. Commands are non-interactive and deterministic given
their inputs; pipeline output equals the composition of the individual
stage commands over the same artifacts.

Exit codes: 0 success, 1 runtime failure (stage named on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import report as report_mod
from .config import EngineConfig, load_config
from .context import ReferenceData
from .engine import clean_to_file, contextualize_file, run_pipeline
from .errors import TransitFlowError
from .gtfs import load_gtfs
from .ingest import GeneratorSource, ReplaySource, ingest_loop
from .spatial import load_geometry
from .store import TupleStore
from .synth import stream_from_config

STORE_ENV = "TRANSITFLOW_STORE"


def _limit_event_time(source, duration_s: int):
    """Pass tuples through until event time advances past the horizon."""
    first_ts = None
    for t in source:
        if first_ts is None:
            first_ts = t.timestamp
        if t.timestamp >= first_ts + duration_s:
            break
        yield t


def _load_json(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _reference_data(gtfs_dir: str, geometry_file: str, cfg: EngineConfig) -> ReferenceData:
    bundle = load_gtfs(gtfs_dir)
    geometries, roads = load_geometry(geometry_file)
    return ReferenceData(
        bundle,
        geometries,
        roads,
        zone_radius_m=cfg.zone_radius_m,
        grid_cell_m=cfg.grid_cell_m,
        buffer_half_width_m=cfg.buffer_half_width_m,
    )


def cmd_ingest(args: argparse.Namespace) -> int:
    if args.source is not None:
        rate = "real_time" if args.real_time else "max_speed"
        source = iter(ReplaySource(args.source, rate=rate))
    else:
        tuples, _truth = stream_from_config(_load_json(args.synth))
        source = iter(GeneratorSource(tuples))
    if args.duration is not None:
        source = _limit_event_time(source, args.duration)
    with TupleStore(args.store) as store:
        summary = ingest_loop(source, store, real_time=args.real_time)
    text = json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.summary:
        Path(args.summary).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if summary.aborted:
        print(f"ingest: aborted: {summary.abort_reason}", file=sys.stderr)
        return 1
    return 0


def cmd_clean(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    canon = _load_json(args.canonicalization) if args.canonicalization else None
    report = clean_to_file(
        args.store, args.out, args.report, config=cfg, canonicalization=canon
    )
    print(f"cleaned {report.output_total} of {report.input_total} tuples")
    return 0


def cmd_contextualize(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    ref = _reference_data(args.gtfs, args.geometry, cfg)
    stats, _timing = contextualize_file(
        args.infile, ref, args.out, visits_file=args.visits, config=cfg
    )
    print(f"contextualized {stats.context_tuples} tuples, {stats.visits} station visits")
    return 0 if not stats.failed_jobs else 1


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.workers is not None:
        cfg = cfg.replace(workers=args.workers)
    canon = _load_json(args.canonicalization) if args.canonicalization else None
    ref = _reference_data(args.gtfs, args.geometry, cfg)
    result = run_pipeline(args.infile, ref, args.out, config=cfg, canonicalization=canon)
    print(f"run artifacts in {result.out_dir}")
    return 0 if not result.failed_jobs else 1


def cmd_report(args: argparse.Namespace) -> int:
    rep = report_mod.load_run(args.run)
    text = report_mod.render(rep, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transitflow",
        description="Streaming cleanup and mobility contextualization for transit GPS feeds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="pull a feed into a tuple store")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--source", help="recorded NDJSON or CSV feed file to replay")
    src.add_argument("--synth", help="synthetic stream config (JSON file)")
    p.add_argument("--store", default=os.environ.get(STORE_ENV),
                   help=f"store directory (default: ${STORE_ENV})")
    p.add_argument("--real-time", action="store_true",
                   help="honor event-time pacing and late flags")
    p.add_argument("--duration", type=int, metavar="S",
                   help="stop after S seconds of event time")
    p.add_argument("--summary", help="also write the ingest summary JSON here")
    p.set_defaults(func=cmd_ingest, stage="ingest")

    p = sub.add_parser("clean", help="run the cleaning stage over a store or feed file")
    p.add_argument("--store", default=os.environ.get(STORE_ENV), metavar="DIR",
                   help=f"store directory or feed file (default: ${STORE_ENV})")
    p.add_argument("--out", required=True, help="cleaned NDJSON output")
    p.add_argument("--report", required=True, help="cleaning report JSON output")
    p.add_argument("--canonicalization", help="attribute canonicalization table (JSON)")
    p.add_argument("--config", help="engine config JSON")
    p.set_defaults(func=cmd_clean, stage="clean")

    p = sub.add_parser("contextualize", help="enrich cleaned tuples with mobility context")
    p.add_argument("--in", dest="infile", required=True, help="cleaned NDJSON input")
    p.add_argument("--gtfs", required=True, help="GTFS directory")
    p.add_argument("--geometry", required=True, help="route/road geometry GeoJSON")
    p.add_argument("--out", required=True, help="context NDJSON output")
    p.add_argument("--visits", help="station-visit NDJSON output")
    p.add_argument("--config", help="engine config JSON")
    p.set_defaults(func=cmd_contextualize, stage="contextualize")

    p = sub.add_parser("pipeline", help="clean + contextualize end to end")
    p.add_argument("--in", dest="infile", default=os.environ.get(STORE_ENV),
                   help=f"store directory or feed file (default: ${STORE_ENV})")
    p.add_argument("--gtfs", required=True, help="GTFS directory")
    p.add_argument("--geometry", required=True, help="route/road geometry GeoJSON")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--workers", type=int, help="reduce worker processes")
    p.add_argument("--config", help="engine config JSON")
    p.add_argument("--canonicalization", help="attribute canonicalization table (JSON)")
    p.set_defaults(func=cmd_pipeline, stage="pipeline")

    p = sub.add_parser("report", help="render tables from a pipeline run directory")
    p.add_argument("--run", required=True, help="run directory written by pipeline")
    p.add_argument("--format", choices=("json", "csv", "md"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_report, stage="report")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "store", None) is None and args.stage in ("ingest", "clean"):
        parser.error(f"--store is required (or set ${STORE_ENV})")
    if getattr(args, "infile", None) is None and args.stage == "pipeline":
        parser.error(f"--in is required (or set ${STORE_ENV})")
    try:
        return args.func(args)
    except (TransitFlowError, OSError, json.JSONDecodeError) as exc:
        print(f"{args.stage}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
