#!/usr/bin/env python3
"""Regenerate the frozen detour snapshot used by the acceptance suite.

The detour fixture is a scripted trip that leaves its route's buffer for a
known index range and dwells at two stations. This script contextualizes it
through the real engine, checks the output against the fixture's
by-construction labels (off-route sentinel exactly on the detour tuples,
valid origin/destination chain, expected visits), and only then freezes the
NDJSON. Review the printed table before committing a refreshed snapshot.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

from transitflow import schema
from transitflow.context import ReferenceData
from transitflow.engine import map_phase, reduce_phase, shuffle
from transitflow.model import DESTINATION, ORIGIN
from transitflow.synth import build_detour_fixture

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "golden_detour.ndjson"


def contextualized_bytes(fx) -> bytes:
    ref = ReferenceData(fx.bundle, {fx.route_id: fx.geometry}, fx.roads)
    jobs = shuffle(map_phase(list(fx.trip))[0])
    ctx, visits = io.BytesIO(), io.BytesIO()
    stats = reduce_phase(jobs, ref, 1, ctx, visits)
    if stats.failed_jobs:
        raise SystemExit(f"contextualization failed: {stats.failed_jobs}")
    return ctx.getvalue()


def review(fx, payload: bytes) -> list[str]:
    """Compare the payload against the fixture's constructed labels."""
    problems: list[str] = []
    records = [json.loads(line) for line in payload.decode("utf-8").splitlines()]
    if len(records) != len(fx.trip):
        problems.append(f"expected {len(fx.trip)} records, payload has {len(records)}")
        return problems

    offroute = set(fx.offroute_indexes)
    for i, rec in enumerate(records):
        is_sentinel = rec["a20_street"] == schema.WRONG_STREET_SEGMENT
        if is_sentinel != (i in offroute):
            problems.append(f"tuple {i}: sentinel={is_sentinel}, scripted={i in offroute}")
        if rec["a19_activity"] != fx.activities[i].value:
            problems.append(
                f"tuple {i}: activity {rec['a19_activity']} != {fx.activities[i].value}"
            )

    positions = [rec["a24_trip_position"] for rec in records]
    want = [ORIGIN, *range(1, len(records) - 1), DESTINATION]
    if positions != want:
        problems.append("origin/destination chain is wrong")

    stopover_tags = [
        (i, rec["a21_station"]) for i, rec in enumerate(records)
        if rec["a19_activity"] == "stopover"
    ]
    got_visits = []
    for i, tag in stopover_tags:
        entry = (tag["id"], tag["direction"], i)
        if got_visits and got_visits[-1][0] == entry[:2] and got_visits[-1][2] == i - 1:
            got_visits[-1] = (entry[:2], got_visits[-1][1], i)
        else:
            got_visits.append((entry[:2], i, i))
    scripted = [((sid, d), first, last) for sid, d, first, last in fx.expected_visits]
    if got_visits != scripted:
        problems.append(f"visit runs {got_visits} != scripted {scripted}")
    return problems


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    parser.add_argument("--check", action="store_true",
                        help="verify the existing snapshot instead of rewriting it")
    args = parser.parse_args(argv)

    fx = build_detour_fixture()
    payload = contextualized_bytes(fx)
    problems = review(fx, payload)

    print(f"trip tuples:        {len(fx.trip)}")
    print(f"off-route tuples:   {len(fx.offroute_indexes)} "
          f"(indexes {fx.offroute_indexes[0]}..{fx.offroute_indexes[-1]})")
    print(f"scripted visits:    {len(fx.expected_visits)}")
    for sid, direction, first, last in fx.expected_visits:
        print(f"  {sid} {direction:<8} tuples {first}..{last}")
    if problems:
        print("REVIEW FAILED:")
        for p in problems:
            print(f"  - {p}")
        return 1

    if args.check:
        current = args.out.read_bytes() if args.out.exists() else b""
        if current != payload:
            print(f"STALE: {args.out} does not match regenerated output")
            return 1
        print(f"snapshot up to date: {args.out}")
        return 0

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(payload)
    print(f"froze {len(payload.splitlines())} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
