#!/usr/bin/env python3
"""Measure reduce-phase scaling and verify worker-count determinism.

Runs the full pipeline over one corpus at several worker counts, prints a
phase-timing table with speedups relative to one worker, and checks that
every deterministic artifact is byte-identical across worker counts. On
boxes with fewer than 4 cores the timing numbers are not meaningful as
speedups, but the determinism check still is.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from transitflow.config import EngineConfig
from transitflow.context import ReferenceData
from transitflow.engine import run_pipeline
from transitflow.gtfs import load_gtfs
from transitflow.spatial import load_geometry
from transitflow.synth import CorpusSpec, build_corpus

DETERMINISTIC = ("cleaned.ndjson", "context.ndjson", "station_visits.ndjson",
                 "clean_report.json", "run_report.json")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--total", type=int, default=500_000,
                        help="corpus arrivals (default 500000)")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    parser.add_argument("--corpus", type=Path,
                        help="reuse an existing corpus directory instead of building one")
    parser.add_argument("--keep", type=Path,
                        help="keep run directories under this path")
    args = parser.parse_args(argv)

    scratch = args.keep or Path(tempfile.mkdtemp(prefix="transitflow_bench_"))
    scratch.mkdir(parents=True, exist_ok=True)
    if args.corpus:
        corpus_dir = args.corpus
        paths = {
            "corpus": corpus_dir / "corpus.ndjson",
            "gtfs": corpus_dir / "gtfs",
            "geometry": corpus_dir / "geometry.geojson",
            "canonicalization": corpus_dir / "canonicalization.json",
        }
    else:
        print(f"building {args.total}-arrival corpus (seed {args.seed})...")
        paths, _ = build_corpus(CorpusSpec(total=args.total, seed=args.seed),
                                scratch / "corpus")

    geometries, roads = load_geometry(paths["geometry"])
    ref = ReferenceData(load_gtfs(paths["gtfs"]), geometries, roads)
    canon = json.loads(Path(paths["canonicalization"]).read_text(encoding="utf-8"))

    print(f"cores available: {os.cpu_count()}")
    print(f"{'workers':>7}  {'clean_s':>8}  {'map_s':>7}  {'shuffle_s':>9}  "
          f"{'reduce_s':>8}  {'total_s':>8}  {'speedup':>7}")
    base_reduce = None
    run_dirs = []
    for w in args.workers:
        out = scratch / f"run_w{w}"
        run_pipeline(paths["corpus"], ref, out,
                     config=EngineConfig(workers=w), canonicalization=canon)
        t = json.loads((out / "timings.json").read_text(encoding="utf-8"))
        if base_reduce is None:
            base_reduce = t["reduce_s"]
        speedup = base_reduce / t["reduce_s"] if t["reduce_s"] else float("nan")
        print(f"{w:>7}  {t['clean_s']:>8.2f}  {t['map_s']:>7.2f}  "
              f"{t['shuffle_s']:>9.2f}  {t['reduce_s']:>8.2f}  "
              f"{t['total_s']:>8.2f}  {speedup:>6.2f}x")
        run_dirs.append(out)

    reference = run_dirs[0]
    identical = True
    for out in run_dirs[1:]:
        for name in DETERMINISTIC:
            if (out / name).read_bytes() != (reference / name).read_bytes():
                print(f"MISMATCH: {out / name} differs from {reference / name}")
                identical = False
    print("deterministic artifacts byte-identical across worker counts: "
          + ("yes" if identical else "NO"))
    if not args.keep and not args.corpus:
        print(f"(scratch kept at {scratch}; delete when done)")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
