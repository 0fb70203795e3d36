"""Synthetic feeds with exact ground truth.

Everything here builds test and acceptance inputs: scripted single trips
whose labels are known by construction, and large corpora whose injected
defect counts are recorded exactly. Fixtures are generated in meter space
on a local frame and converted to lat/lng, keeping every point at least a
meter away from the 15 m and 30 m decision boundaries so that label
agreement tests exercise logic, not float sensitivity.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import schema
from .errors import ConfigError
from .geo import LocalFrame
from .gtfs import GtfsBundle, Route, Station, StopTime, Trip, write_gtfs
from .model import ActivityClass, MotionLabel, RawTuple
from .serde import dumps_record, record_from_tuple
from .spatial import RoadLine, RouteGeometry, write_geometry

# One-year feed statistics observed on a mid-size transit network; desk
# corpora reproduce these ratios at configurable scale.
REFERENCE_FEED_TOTAL = 65_097_658
REFERENCE_FEED_DUPLICATES = 38_167_787
REFERENCE_FEED_SPARSE_DELETED = 480_000
REFERENCE_FEED_STANDARDIZED = 6_000
REFERENCE_FEED_CLEANED = 26_443_871

DUPLICATE_RATIO = REFERENCE_FEED_DUPLICATES / REFERENCE_FEED_TOTAL
SPARSE_RATIO = REFERENCE_FEED_SPARSE_DELETED / REFERENCE_FEED_TOTAL
STANDARDIZED_RATIO = REFERENCE_FEED_STANDARDIZED / REFERENCE_FEED_TOTAL

BASE_LAT = 46.06
BASE_LNG = -64.78
DEFAULT_START_TS = 1_700_000_000  # divisible by the 5 s cadence

_NONESSENTIAL = tuple(
    n for n in schema.DESCRIPTOR_NAMES if n not in schema.ESSENTIAL_DESCRIPTORS
)


def _iso(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def make_descriptors(route_id: str, trip_id: str, vehicle_id: str,
                     start_ts: int, finish_ts: int) -> dict[str, str]:
    """A full, plausible 14-descriptor set shared by one trip's tuples."""
    num = "".join(ch for ch in route_id if ch.isdigit()) or "1"
    return {
        "vlr_id": f"{vehicle_id}-{trip_id}",
        "route_id_vlr": route_id,
        "route_name": f"Route {num}",
        "route_id_rta": f"rta-{num}",
        "route_nickname": f"R{num}",
        "trip_id_br": f"br-{trip_id}",
        "transit_authority_service_time_id": f"svc-{trip_id}",
        "trip_id_tta": trip_id,
        "trip_start": _iso(start_ts),
        "trip_finish": _iso(finish_ts),
        "vehicle_id_vab": f"vab-{vehicle_id}",
        "vehicle_id_vlr": f"vlr-{vehicle_id}",
        "vehicle_id_vlr_ta": vehicle_id,
        "bdescription": f"Route {num} service",
    }


def default_canonicalization(route_nums: Iterable[str]) -> dict:
    """Alias table mapping corrupted route_name variants to canonical form."""
    aliases = {f"route {num}": f"Route {num}" for num in route_nums}
    return {"route_name": {"aliases": aliases}}


class _ArcWalker:
    """Position along a polyline by arc length, ping-ponging at the ends."""

    def __init__(self, points_xy: Sequence[tuple[float, float]]):
        if len(points_xy) < 2:
            raise ConfigError("trip geometry needs >= 2 points")
        self.pts = list(points_xy)
        self.cum = [0.0]
        for a, b in zip(self.pts, self.pts[1:]):
            self.cum.append(self.cum[-1] + math.hypot(b[0] - a[0], b[1] - a[1]))
        self.total = self.cum[-1]
        if self.total == 0.0:
            raise ConfigError("trip geometry has zero length")

    def point_at(self, s: float) -> tuple[float, float]:
        m = math.fmod(s, 2.0 * self.total)
        if m < 0.0:
            m += 2.0 * self.total
        if m > self.total:
            m = 2.0 * self.total - m
        for i in range(len(self.cum) - 1):
            if self.cum[i + 1] >= m:
                seg = self.cum[i + 1] - self.cum[i]
                t = 0.0 if seg == 0.0 else (m - self.cum[i]) / seg
                ax, ay = self.pts[i]
                bx, by = self.pts[i + 1]
                return (ax + t * (bx - ax), ay + t * (by - ay))
        return self.pts[-1]


@dataclass(frozen=True, slots=True)
class TripSpec:
    trip_id: str
    route_id: str
    vehicle_id: str
    start_ts: int
    length: int
    cadence_s: int = schema.CADENCE_S
    step_m: float = 20.0
    start_arc_m: float = 0.0


@dataclass(frozen=True, slots=True)
class DefectProfile:
    """Exact defect injection plan; all counts are reproduced verbatim."""

    seed: int = 0
    duplicates: int = 0
    duplicate_rate: float | None = None
    # (trip index in the schedule, gap after this tuple index, missing count)
    gap_injections: tuple[tuple[int, int, int], ...] = ()
    missing_nonessential: int = 0
    missing_essential: int = 0
    extra_attributes: int = 0
    corrupted_values: int = 0
    noise_sigma_m: float = 0.0

    def validate(self) -> None:
        counts = (
            self.duplicates,
            self.missing_nonessential,
            self.missing_essential,
            self.extra_attributes,
            self.corrupted_values,
        )
        if any(c < 0 for c in counts):
            raise ConfigError("defect counts must be >= 0")
        if self.duplicate_rate is not None and not 0.0 <= self.duplicate_rate <= 1.0:
            raise ConfigError("duplicate_rate must be within [0, 1]")
        if self.noise_sigma_m < 0.0:
            raise ConfigError("noise_sigma_m must be >= 0")
        for trip_idx, after, missing in self.gap_injections:
            if trip_idx < 0 or after < 0 or missing < 1:
                raise ConfigError("gap injections need trip >= 0, index >= 0, missing >= 1")


@dataclass(slots=True)
class GroundTruth:
    """Injected-defect inventory, exact by bookkeeping."""

    seed: int = 0
    base_tuples: int = 0
    emitted: int = 0
    duplicates: int = 0
    duplicate_positions: list[int] = field(default_factory=list)
    missing_total: int = 0
    gap_count: int = 0
    sparse_trip_keys: list[str] = field(default_factory=list)
    sparse_tuples: int = 0
    values_set_na: int = 0
    tuples_deleted: int = 0
    attributes_stripped: int = 0
    values_standardized: int = 0
    expected_output: int = 0

    def expected_clean_counts(self) -> dict:
        """The CleanReport this corpus must produce, as a dict subset."""
        return {
            "input_total": self.emitted,
            "output_total": self.expected_output,
            "missing_tuples": self.missing_total,
            "trips_dropped": len(self.sparse_trip_keys),
            "sparse_tuples_dropped": self.sparse_tuples,
            "duplicates_removed": self.duplicates,
            "duplicate_conflicts": 0,
            "values_set_na": self.values_set_na,
            "tuples_deleted": self.tuples_deleted,
            "attributes_stripped": self.attributes_stripped,
            "values_standardized": self.values_standardized,
            "dropped_trip_keys": sorted(self.sparse_trip_keys),
        }

    def to_dict(self) -> dict:
        return asdict(self)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GroundTruth":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def generate_trip(
    geometry: RouteGeometry,
    frame: LocalFrame,
    spec: TripSpec,
    gaps: dict[int, int] | None = None,
    rng: random.Random | None = None,
    noise_sigma_m: float = 0.0,
) -> list[RawTuple]:
    """Emit one trip's tuples along the route at the given cadence.

    gaps maps a tuple index to the count of cadence slots silently skipped
    after it; position advances through the gap so speed stays steady.
    """
    gaps = gaps or {}
    walker = _ArcWalker([frame.to_xy(lat, lng) for lat, lng in geometry.points])
    total_missing = sum(gaps.values())
    finish_ts = spec.start_ts + (spec.length - 1 + total_missing) * spec.cadence_s
    descriptors = make_descriptors(
        spec.route_id, spec.trip_id, spec.vehicle_id, spec.start_ts, finish_ts
    )
    tuples: list[RawTuple] = []
    slot = 0
    for i in range(spec.length):
        if i > 0:
            slot += 1 + gaps.get(i - 1, 0)
        x, y = walker.point_at(spec.start_arc_m + slot * spec.step_m)
        if noise_sigma_m > 0.0 and rng is not None:
            x += rng.gauss(0.0, noise_sigma_m)
            y += rng.gauss(0.0, noise_sigma_m)
        lat, lng = frame.from_xy(x, y)
        tuples.append(
            RawTuple(
                descriptors=descriptors,
                lat=lat,
                lng=lng,
                timestamp=spec.start_ts + slot * spec.cadence_s,
            )
        )
    return tuples


def generate_synthetic(
    geometry: RouteGeometry | dict[str, RouteGeometry],
    schedule: Sequence[TripSpec],
    profile: DefectProfile | None = None,
) -> tuple[list[RawTuple], GroundTruth]:
    """Tuple stream for a schedule of trips with exact defect injection.

    Returns the emitted arrival-order stream and its ground truth. Arrival
    order is timestamp order with duplicates retransmitted immediately
    after their originals. Attribute defects target distinct non-duplicated
    tuples so every report count is exactly attributable.
    """
    profile = profile or DefectProfile()
    profile.validate()
    geometries = geometry if isinstance(geometry, dict) else {geometry.route_id: geometry}
    rng = random.Random(profile.seed)
    truth = GroundTruth(seed=profile.seed)

    frame = LocalFrame.centered_on(BASE_LAT, BASE_LNG)
    per_trip: list[list[RawTuple]] = []
    gaps_by_trip: dict[int, dict[int, int]] = {}
    for trip_idx, after, missing in profile.gap_injections:
        if trip_idx >= len(schedule):
            raise ConfigError(f"gap injection targets trip {trip_idx}, schedule has {len(schedule)}")
        if after >= schedule[trip_idx].length - 1:
            raise ConfigError("gap injection index beyond trip end")
        gaps_by_trip.setdefault(trip_idx, {})[after] = missing
    for trip_idx, spec in enumerate(schedule):
        if spec.route_id not in geometries:
            raise ConfigError(f"schedule references unknown route {spec.route_id!r}")
        per_trip.append(
            generate_trip(
                geometries[spec.route_id],
                frame,
                spec,
                gaps=gaps_by_trip.get(trip_idx),
                rng=rng,
                noise_sigma_m=profile.noise_sigma_m,
            )
        )
        truth.missing_total += sum(gaps_by_trip.get(trip_idx, {}).values())
        truth.gap_count += len(gaps_by_trip.get(trip_idx, {}))

    sparse_trips = {
        trip_idx
        for trip_idx, gaps in gaps_by_trip.items()
        if sum(gaps.values()) >= schema.SPARSE_TRIP_THRESHOLD
    }
    for trip_idx in sorted(sparse_trips):
        spec = schedule[trip_idx]
        key = f"{spec.route_id}|{spec.trip_id}|{_iso(spec.start_ts)[:10]}"
        truth.sparse_trip_keys.append(key)
        truth.sparse_tuples += spec.length

    base: list[tuple[int, RawTuple]] = []  # (trip index, tuple)
    for trip_idx, tuples in enumerate(per_trip):
        base.extend((trip_idx, t) for t in tuples)
    base.sort(key=lambda pair: (pair[1].timestamp, schedule[pair[0]].trip_id))
    truth.base_tuples = len(base)

    dup_count = profile.duplicates
    if profile.duplicate_rate is not None:
        dup_count = round(profile.duplicate_rate * len(base))
    eligible = [i for i, (trip_idx, _) in enumerate(base) if trip_idx not in sparse_trips]
    defect_total = (
        profile.missing_nonessential
        + profile.missing_essential
        + profile.extra_attributes
        + profile.corrupted_values
    )
    if dup_count > 0 and not eligible:
        raise ConfigError("no eligible tuples to duplicate")
    if defect_total > len(eligible):
        raise ConfigError("more attribute defects than eligible tuples")

    dup_targets = rng.choices(eligible, k=dup_count) if dup_count else []
    copies_per_index: dict[int, int] = {}
    for i in dup_targets:
        copies_per_index[i] = copies_per_index.get(i, 0) + 1

    # Attribute defects go to distinct, non-duplicated, interior tuples so
    # deletions change gap arithmetic by exactly +1 each.
    defect_pool = [i for i in eligible if i not in copies_per_index]
    interior_pool = []
    for i in defect_pool:
        trip_idx, t = base[i]
        trip = per_trip[trip_idx]
        if len(trip) >= 3 and t is not trip[0] and t is not trip[-1]:
            interior_pool.append(i)
    if defect_total > len(interior_pool):
        raise ConfigError("more attribute defects than interior tuples available")
    chosen = rng.sample(interior_pool, k=defect_total)
    cursor = 0
    na_set = set(chosen[cursor:cursor + profile.missing_nonessential])
    cursor += profile.missing_nonessential
    del_set = set(chosen[cursor:cursor + profile.missing_essential])
    cursor += profile.missing_essential
    extra_set = set(chosen[cursor:cursor + profile.extra_attributes])
    cursor += profile.extra_attributes
    corrupt_set = set(chosen[cursor:cursor + profile.corrupted_values])

    emitted: list[RawTuple] = []
    for i, (trip_idx, t) in enumerate(base):
        out = t
        if i in na_set:
            dropped = rng.choice(_NONESSENTIAL)
            desc = {k: v for k, v in t.descriptors.items() if k != dropped}
            out = RawTuple(desc, t.lat, t.lng, t.timestamp)
            truth.values_set_na += 1
        elif i in del_set:
            dropped = rng.choice(sorted(schema.ESSENTIAL_DESCRIPTORS))
            desc = {k: v for k, v in t.descriptors.items() if k != dropped}
            out = RawTuple(desc, t.lat, t.lng, t.timestamp)
            truth.tuples_deleted += 1
            truth.missing_total += 1  # its absence becomes a 2-cadence gap
        elif i in extra_set:
            desc = dict(t.descriptors)
            desc[f"debug_field_{i % 3}"] = "diagnostic"
            out = RawTuple(desc, t.lat, t.lng, t.timestamp)
            truth.attributes_stripped += 1
        elif i in corrupt_set:
            desc = dict(t.descriptors)
            desc["route_name"] = f"  {desc['route_name'].upper()} "
            out = RawTuple(desc, t.lat, t.lng, t.timestamp)
            truth.values_standardized += 1
        emitted.append(out)
        for _ in range(copies_per_index.get(i, 0)):
            truth.duplicate_positions.append(len(emitted))
            emitted.append(out)

    truth.duplicates = len(truth.duplicate_positions)
    truth.emitted = len(emitted)
    truth.expected_output = (
        truth.emitted - truth.duplicates - truth.tuples_deleted - truth.sparse_tuples
    )
    return emitted, truth


# ---------------------------------------------------------------------------
# Synthetic network and ratio corpora


_STREET_POOL = (
    "Main St", "Mountain Rd", "Salisbury Rd", "Elmwood Dr", "Shediac Rd",
    "Champlain St", "Paul St", "Morton Ave", "Vaughan Harvey Blvd", "Killam Dr",
)


@dataclass(frozen=True, slots=True)
class SynthNetwork:
    frame: LocalFrame
    bundle: GtfsBundle
    geometries: dict[str, RouteGeometry]
    roads: tuple[RoadLine, ...]


def build_network(
    n_routes: int = 3,
    route_len_m: float = 4000.0,
    leg_len_m: float = 400.0,
    station_spacing_m: float = 500.0,
) -> SynthNetwork:
    """A small grid-city: parallel east-west routes with named legs,
    stations mid-leg, and two cross streets per route for intersections."""
    frame = LocalFrame.centered_on(BASE_LAT, BASE_LNG)
    stations: dict[str, Station] = {}
    routes: dict[str, Route] = {}
    trips: dict[str, Trip] = {}
    stop_times: list[StopTime] = []
    geometries: dict[str, RouteGeometry] = {}
    roads: list[RoadLine] = []

    n_legs = max(1, int(route_len_m // leg_len_m))
    for r in range(n_routes):
        route_id = f"r{r + 1:02d}"
        y = 400.0 * r
        xs = [k * leg_len_m for k in range(n_legs + 1)]
        points = tuple(frame.from_xy(x, y) for x in xs)
        names = tuple(
            f"{_STREET_POOL[(r + k) % len(_STREET_POOL)]}" for k in range(n_legs)
        )
        geometries[route_id] = RouteGeometry(
            route_id=route_id, points=points, street_names=names
        )
        routes[route_id] = Route(route_id=route_id, name=f"Route {r + 1}")

        gtfs_trip = f"g{r + 1:02d}"
        trips[gtfs_trip] = Trip(trip_id=gtfs_trip, route_id=route_id)
        n_stations = int(route_len_m // station_spacing_m)
        for k in range(n_stations):
            x = station_spacing_m * (k + 0.5)
            sid = f"s{r + 1:02d}{k + 1:02d}"
            lat, lng = frame.from_xy(x, y)
            stations[sid] = Station(station_id=sid, name=f"Stop {r + 1}-{k + 1}", lat=lat, lng=lng)
            stop_times.append(
                StopTime(
                    trip_id=gtfs_trip,
                    station_id=sid,
                    arrival=f"{8 + k // 60:02d}:{k % 60:02d}:00",
                    departure=f"{8 + k // 60:02d}:{k % 60:02d}:30",
                    sequence=k + 1,
                )
            )

        # The road layer mirrors the route street plus two cross streets
        # anchored at polyline vertices so intersections have degree 4.
        for k in range(n_legs):
            roads.append(
                RoadLine(
                    name=names[k],
                    points=(points[k], points[k + 1]),
                )
            )
        for cross_x in (leg_len_m * 3, leg_len_m * (n_legs - 3)):
            if 0 < cross_x < route_len_m:
                cross = (
                    frame.from_xy(cross_x, y - 120.0),
                    frame.from_xy(cross_x, y),
                    frame.from_xy(cross_x, y + 120.0),
                )
                roads.append(RoadLine(name=f"Cross {r + 1} at {int(cross_x)}", points=cross))

    # Cross streets meet the route mid-polyline; the per-leg road pieces
    # above give each shared vertex the >= 3 leg degree needed.
    bundle = GtfsBundle(
        stations=stations, routes=routes, trips=trips, stop_times=tuple(stop_times)
    )
    bundle.validate()
    return SynthNetwork(
        frame=frame, bundle=bundle, geometries=geometries, roads=tuple(roads)
    )


@dataclass(frozen=True, slots=True)
class CorpusSpec:
    """Plan for a ratio corpus; defaults reproduce the reference-feed ratios."""

    total: int = 100_000
    seed: int = 7
    routes: int = 3
    trip_length: int = 720
    cadence_s: int = schema.CADENCE_S
    step_m: float = 20.0
    start_ts: int = DEFAULT_START_TS
    duplicate_ratio: float = DUPLICATE_RATIO
    sparse_ratio: float = SPARSE_RATIO
    standardized_ratio: float = STANDARDIZED_RATIO
    small_gaps: int = 40
    missing_nonessential: int = 25
    missing_essential: int = 20
    extra_attributes: int = 15
    noise_sigma_m: float = 0.0


def plan_corpus(spec: CorpusSpec) -> tuple[SynthNetwork, list[TripSpec], DefectProfile]:
    """Resolve a CorpusSpec into a schedule and defect profile with exact counts."""
    for name, ratio in (
        ("duplicate_ratio", spec.duplicate_ratio),
        ("sparse_ratio", spec.sparse_ratio),
        ("standardized_ratio", spec.standardized_ratio),
    ):
        if not 0.0 <= ratio <= 1.0:
            raise ConfigError(f"{name} must be within [0, 1]")
    duplicates = round(spec.total * spec.duplicate_ratio)
    sparse_tuples = round(spec.total * spec.sparse_ratio)
    standardized = round(spec.total * spec.standardized_ratio)
    base = spec.total - duplicates
    normal = base - sparse_tuples
    if base < 2 or normal < 2:
        raise ConfigError(
            f"infeasible ratios: {spec.total} arrivals leave {normal} normal tuples"
        )
    if sparse_tuples == 1:
        raise ConfigError("sparse_ratio yields a single-tuple sparse trip; cannot carry a gap")

    network = build_network(n_routes=spec.routes)
    route_ids = sorted(network.geometries)

    sizes: list[tuple[int, bool]] = []  # (length, is_sparse)
    if sparse_tuples:
        k = max(1, math.ceil(sparse_tuples / spec.trip_length))
        per, rem = divmod(sparse_tuples, k)
        sparse_sizes = [per + (1 if i < rem else 0) for i in range(k)]
        if min(sparse_sizes) < 2:
            raise ConfigError("sparse trips too small to carry a gap")
        sizes.extend((s, True) for s in sparse_sizes)
    full, rem = divmod(normal, spec.trip_length)
    normal_sizes = [spec.trip_length] * full
    if rem >= 2:
        normal_sizes.append(rem)
    elif rem == 1:
        if not normal_sizes:
            raise ConfigError("corpus too small for a trip")
        normal_sizes[-1] += 1
    sizes.extend((s, False) for s in normal_sizes)

    day_s = 86_400
    route_clock = {rid: 0 for rid in route_ids}
    schedule: list[TripSpec] = []
    gap_injections: list[tuple[int, int, int]] = []
    small_gap_budget = spec.small_gaps
    for t, (size, is_sparse) in enumerate(sizes):
        rid = route_ids[t % len(route_ids)]
        extra_slots = schema.SPARSE_TRIP_THRESHOLD if is_sparse else 3
        duration = (size + extra_slots) * spec.cadence_s
        offset = route_clock[rid]
        # A trip split across two service dates becomes two partitions, which
        # would break sparse-trip accounting; push it to the next midnight.
        phase = (spec.start_ts + offset) % day_s
        if phase + duration >= day_s:
            offset += day_s - phase
        route_clock[rid] = offset + duration + 600
        schedule.append(
            TripSpec(
                trip_id=f"t{t + 1:05d}",
                route_id=rid,
                vehicle_id=f"v{t % 40 + 1:03d}",
                start_ts=spec.start_ts + offset,
                length=size,
                cadence_s=spec.cadence_s,
                step_m=spec.step_m,
            )
        )
        if is_sparse:
            gap_injections.append((t, size // 2, schema.SPARSE_TRIP_THRESHOLD))
        elif small_gap_budget > 0 and size >= 8:
            gap_injections.append((t, size // 3, small_gap_budget % 3 + 1))
            small_gap_budget -= 1

    profile = DefectProfile(
        seed=spec.seed,
        duplicates=duplicates,
        gap_injections=tuple(gap_injections),
        missing_nonessential=spec.missing_nonessential,
        missing_essential=spec.missing_essential,
        extra_attributes=spec.extra_attributes,
        corrupted_values=standardized,
        noise_sigma_m=spec.noise_sigma_m,
    )
    return network, schedule, profile


def build_corpus(spec: CorpusSpec, out_dir: str | Path) -> tuple[dict[str, Path], GroundTruth]:
    """Generate a ratio corpus on disk: feed, reference data, ground truth."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    network, schedule, profile = plan_corpus(spec)
    emitted, truth = generate_synthetic(network.geometries, schedule, profile)
    if truth.emitted != spec.total:
        raise ConfigError(
            f"corpus plan emitted {truth.emitted} arrivals, wanted {spec.total}"
        )

    paths = {
        "corpus": out / "corpus.ndjson",
        "ground_truth": out / "ground_truth.json",
        "gtfs": out / "gtfs",
        "geometry": out / "geometry.geojson",
        "canonicalization": out / "canonicalization.json",
        "meta": out / "meta.json",
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for t in emitted:
            fh.write(dumps_record(record_from_tuple(t)) + "\n")
    truth.save(paths["ground_truth"])
    write_gtfs(network.bundle, paths["gtfs"])
    write_geometry(paths["geometry"], network.geometries.values(), network.roads)
    nums = [str(r + 1) for r in range(spec.routes)]
    paths["canonicalization"].write_text(
        json.dumps(default_canonicalization(nums), indent=2) + "\n", encoding="utf-8"
    )
    paths["meta"].write_text(
        json.dumps({"spec": asdict(spec)}, indent=2) + "\n", encoding="utf-8"
    )
    return paths, truth


def build_acceptance_corpus(
    out_dir: str | Path, total: int = 100_000, seed: int = 7
) -> tuple[dict[str, Path], GroundTruth]:
    """The reference-ratio corpus at desk scale, seed-reproducible."""
    return build_corpus(CorpusSpec(total=total, seed=seed), out_dir)


def stream_from_config(cfg: dict) -> tuple[list[RawTuple], GroundTruth]:
    """Arrival stream from a plain-dict synth config (used by the CLI).

    Recognized keys: routes, trips, trip_length or duration_s, cadence_s,
    step_m, start_ts, seed, and an optional "defects" object whose keys
    mirror the defect plan (duplicates, duplicate_rate, missing_nonessential,
    missing_essential, extra_attributes, corrupted_values, noise_sigma_m).
    """
    known = {
        "routes", "trips", "trip_length", "duration_s", "cadence_s",
        "step_m", "start_ts", "seed", "defects",
    }
    unknown = set(cfg) - known
    if unknown:
        raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
    cadence = int(cfg.get("cadence_s", schema.CADENCE_S))
    if "trip_length" in cfg:
        length = int(cfg["trip_length"])
    else:
        length = int(cfg.get("duration_s", 3600)) // cadence
    trips = int(cfg.get("trips", 1))
    if trips < 1 or length < 1:
        raise ConfigError("synth config needs at least one trip of one tuple")
    network = build_network(n_routes=int(cfg.get("routes", 1)))
    route_ids = sorted(network.geometries)
    start_ts = int(cfg.get("start_ts", DEFAULT_START_TS))
    stride = (length + 120) * cadence
    schedule = [
        TripSpec(
            trip_id=f"t{i + 1:05d}",
            route_id=route_ids[i % len(route_ids)],
            vehicle_id=f"v{i % 40 + 1:03d}",
            start_ts=start_ts + (i // len(route_ids)) * stride,
            length=length,
            cadence_s=cadence,
            step_m=float(cfg.get("step_m", 20.0)),
        )
        for i in range(trips)
    ]
    defects = dict(cfg.get("defects", {}))
    defects.setdefault("seed", int(cfg.get("seed", 0)))
    try:
        profile = DefectProfile(**defects)
    except TypeError as exc:
        raise ConfigError(f"bad defects object: {exc}") from None
    return generate_synthetic(network.geometries, schedule, profile)


# ---------------------------------------------------------------------------
# Label-exact fixtures


@dataclass(frozen=True, slots=True)
class LabeledFixture:
    """A scripted trip with labels known by construction."""

    route_id: str
    trip: tuple[RawTuple, ...]
    motions: tuple[MotionLabel, ...]
    activities: tuple[ActivityClass, ...]
    frame: LocalFrame
    bundle: GtfsBundle
    geometry: RouteGeometry
    roads: tuple[RoadLine, ...]
    # indexes whose street annotation must be the off-route sentinel
    offroute_indexes: tuple[int, ...] = ()
    # (station_id, direction value, first index, last index) per scripted visit
    expected_visits: tuple[tuple[str, str, int, int], ...] = ()
    # indexes inside the scripted crossing's 30 m zone
    intersection_indexes: tuple[int, ...] = ()
    # first index within 30 m of the route midpoint (= direction split)
    midpoint_split: int = 0


def _fixture_expectations(
    path: Sequence[tuple[float, float]],
    activities: Sequence[ActivityClass],
    centers: Sequence[tuple[str, float, float]],
    mid_x: float,
    cross_x: float,
) -> tuple[tuple[tuple[str, str, int, int], ...], tuple[int, ...], int]:
    """Visit table, intersection membership, and direction split by geometry.

    Pure meter-space arithmetic over the scripted path; the pipeline under
    test works in lat/lng and must reproduce these.
    """
    split = next(
        (i for i, (x, y) in enumerate(path) if math.hypot(x - mid_x, y) <= schema.ZONE_RADIUS_M),
        len(path),
    )

    def station_at(x: float, y: float) -> str:
        best = min(centers, key=lambda c: (math.hypot(x - c[1], y - c[2]), c[0]))
        assert math.hypot(x - best[1], y - best[2]) <= schema.ZONE_RADIUS_M
        return best[0]

    visits: list[tuple[str, str, int, int]] = []
    i = 0
    while i < len(path):
        if activities[i] is not ActivityClass.STOPOVER:
            i += 1
            continue
        j = i
        sid = station_at(*path[i])
        while (
            j + 1 < len(path)
            and activities[j + 1] is ActivityClass.STOPOVER
            and station_at(*path[j + 1]) == sid
        ):
            j += 1
        direction = "outbound" if i < split else "return"
        visits.append((sid, direction, i, j))
        i = j + 1

    crossing = tuple(
        i for i, (x, y) in enumerate(path) if math.hypot(x - cross_x, y) <= schema.ZONE_RADIUS_M
    )
    return tuple(visits), crossing, split


def _fixture_bundle(route_id: str, route_num: str, frame: LocalFrame,
                    station_xy: Sequence[tuple[str, float, float]]) -> GtfsBundle:
    stations = {}
    stop_times = []
    gtfs_trip = f"g-{route_id}"
    for seq, (sid, x, y) in enumerate(station_xy, start=1):
        lat, lng = frame.from_xy(x, y)
        stations[sid] = Station(station_id=sid, name=f"Stop {sid}", lat=lat, lng=lng)
        stop_times.append(
            StopTime(
                trip_id=gtfs_trip,
                station_id=sid,
                arrival=f"{7 + seq // 60:02d}:{seq % 60:02d}:00",
                departure=f"{7 + seq // 60:02d}:{seq % 60:02d}:30",
                sequence=seq,
            )
        )
    bundle = GtfsBundle(
        stations=stations,
        routes={route_id: Route(route_id=route_id, name=f"Route {route_num}")},
        trips={gtfs_trip: Trip(trip_id=gtfs_trip, route_id=route_id)},
        stop_times=tuple(stop_times),
    )
    bundle.validate()
    return bundle


def _tuples_from_path(route_id: str, trip_id: str, frame: LocalFrame,
                      path_xy: Sequence[tuple[float, float]],
                      start_ts: int = DEFAULT_START_TS,
                      cadence_s: int = schema.CADENCE_S) -> tuple[RawTuple, ...]:
    finish = start_ts + (len(path_xy) - 1) * cadence_s
    descriptors = make_descriptors(route_id, trip_id, "v001", start_ts, finish)
    out = []
    for i, (x, y) in enumerate(path_xy):
        lat, lng = frame.from_xy(x, y)
        out.append(RawTuple(descriptors=descriptors, lat=lat, lng=lng,
                            timestamp=start_ts + i * cadence_s))
    return tuple(out)


def build_classification_fixture(start_ts: int = DEFAULT_START_TS) -> LabeledFixture:
    """A 518-tuple trip with exact label counts.

    Composition: an opening 6-tuple layover, then ten sections of
    [10 cruise moves, a station visit (3 passing moves around a dwell of 6
    or 7 stopovers), 10 cruise moves, a 22-tuple layover]. That yields 230
    moves + 288 stops, splitting into 200 running, 30 passing, 62 stopover,
    and 226 suspension tuples. Every point sits at least 5 m clear of the
    15 m and 30 m boundaries.
    """
    step = 20.0
    dwells = [6] * 8 + [7] * 2  # 62 stopovers over ten visits
    path: list[tuple[float, float]] = []
    motions: list[MotionLabel] = []
    activities: list[ActivityClass] = []
    centers: list[float] = []
    pos = 0.0

    def dwell(n: int) -> None:
        for _ in range(n):
            path.append((pos, 0.0))
            motions.append(MotionLabel.STOP)
            activities.append(ActivityClass.SUSPENSION)

    def cruise(n: int) -> None:
        nonlocal pos
        for _ in range(n):
            pos += step
            path.append((pos, 0.0))
            motions.append(MotionLabel.MOVE)
            activities.append(ActivityClass.RUNNING)

    def visit(n_stopovers: int) -> None:
        nonlocal pos
        center = pos + 2 * step
        centers.append(center)
        for _ in range(2):  # two approach moves inside the zone
            pos += step
            path.append((pos, 0.0))
            motions.append(MotionLabel.MOVE)
            activities.append(ActivityClass.PASSING)
        for _ in range(n_stopovers):
            path.append((pos, 0.0))
            motions.append(MotionLabel.STOP)
            activities.append(ActivityClass.STOPOVER)
        pos += step  # departure move, still inside
        path.append((pos, 0.0))
        motions.append(MotionLabel.MOVE)
        activities.append(ActivityClass.PASSING)

    dwell(6)
    for k in dwells:
        cruise(10)
        visit(k)
        cruise(10)
        dwell(22)

    # Construction sanity: the intended labels must respect the geometry.
    for (x, _), activity in zip(path, activities):
        dist = min(abs(x - c) for c in centers)
        if activity in (ActivityClass.STOPOVER, ActivityClass.PASSING):
            assert dist <= schema.ZONE_RADIUS_M - 1.0
        else:
            assert dist >= schema.ZONE_RADIUS_M + 1.0

    frame = LocalFrame.centered_on(BASE_LAT, BASE_LNG)
    route_id = "r91"
    end = pos + 2 * step
    mid_vertex = 2300.0  # cruise tuples land on it exactly; hosts a crossing
    geometry = RouteGeometry(
        route_id=route_id,
        points=(
            frame.from_xy(-2 * step, 0.0),
            frame.from_xy(mid_vertex, 0.0),
            frame.from_xy(end, 0.0),
        ),
        street_names=("Main St", "Mountain Rd"),
    )
    roads = (
        RoadLine(name="Main St", points=(geometry.points[0], geometry.points[1])),
        RoadLine(name="Mountain Rd", points=(geometry.points[1], geometry.points[2])),
        RoadLine(
            name="Oak Ave",
            points=(
                frame.from_xy(mid_vertex, -120.0),
                frame.from_xy(mid_vertex, 0.0),
                frame.from_xy(mid_vertex, 120.0),
            ),
        ),
    )
    station_xy = [(f"s91{i + 1:02d}", c, 0.0) for i, c in enumerate(centers)]
    bundle = _fixture_bundle(route_id, "91", frame, station_xy)
    trip = _tuples_from_path(route_id, "t9101", frame, path, start_ts)
    visits, crossing, split = _fixture_expectations(
        path, activities, station_xy, mid_x=mid_vertex, cross_x=mid_vertex
    )
    return LabeledFixture(
        route_id=route_id,
        trip=trip,
        motions=tuple(motions),
        activities=tuple(activities),
        frame=frame,
        bundle=bundle,
        geometry=geometry,
        roads=roads,
        expected_visits=visits,
        intersection_indexes=crossing,
        midpoint_split=split,
    )


def build_detour_fixture(start_ts: int = DEFAULT_START_TS) -> LabeledFixture:
    """A trip that leaves its route mid-way and rejoins it.

    The bus runs King St, detours three cell-rows south of the buffer
    around the King/Queen transition, rejoins at a station, and finishes at
    the terminal. Off-route indexes (|y| >= 40 m, one full cell outside the
    30 m buffer) are recorded for the street-sentinel assertions.
    """
    step = 20.0
    path: list[tuple[float, float]] = []
    motions: list[MotionLabel] = []
    activities: list[ActivityClass] = []

    def add(x: float, y: float, motion: MotionLabel, activity: ActivityClass) -> None:
        path.append((x, y))
        motions.append(motion)
        activities.append(activity)

    MOVE, STOP = MotionLabel.MOVE, MotionLabel.STOP
    RUN, PASS, SUS, OVER = (
        ActivityClass.RUNNING,
        ActivityClass.PASSING,
        ActivityClass.SUSPENSION,
        ActivityClass.STOPOVER,
    )

    for _ in range(3):  # layover at the origin terminal station
        add(0.0, 0.0, STOP, OVER)
    add(20.0, 0.0, MOVE, PASS)  # departure move, still inside the origin zone
    x = 20.0
    while x < 360.0:  # cruise toward the first mid-route station at 400
        x += step
        add(x, 0.0, MOVE, RUN)
    add(380.0, 0.0, MOVE, PASS)
    add(400.0, 0.0, MOVE, PASS)
    for _ in range(2):
        add(400.0, 0.0, STOP, OVER)
    add(420.0, 0.0, MOVE, PASS)
    x = 420.0
    while x < 800.0:  # through the King/Queen crossing at 800
        x += step
        add(x, 0.0, MOVE, RUN)
    add(820.0, -20.0, MOVE, RUN)  # detour begins: still inside the buffer
    add(840.0, -40.0, MOVE, RUN)  # first off-route tuple
    add(860.0, -60.0, MOVE, RUN)
    x = 860.0
    while x < 1140.0:  # parallel street three rows south
        x += step
        add(x, -60.0, MOVE, RUN)
    add(1160.0, -40.0, MOVE, RUN)
    add(1180.0, -20.0, MOVE, PASS)  # back inside the buffer and the station zone
    add(1200.0, 0.0, MOVE, PASS)  # rejoins exactly at a station
    for _ in range(2):
        add(1200.0, 0.0, STOP, OVER)
    add(1220.0, 0.0, MOVE, PASS)
    x = 1220.0
    while x < 1560.0:
        x += step
        add(x, 0.0, MOVE, RUN)
    add(1580.0, 0.0, MOVE, PASS)
    add(1600.0, 0.0, MOVE, PASS)
    for _ in range(3):  # terminal layover: trip ends at its destination stop
        add(1600.0, 0.0, STOP, OVER)

    offroute = tuple(i for i, (_, y) in enumerate(path) if y <= -40.0)

    frame = LocalFrame.centered_on(BASE_LAT, BASE_LNG)
    route_id = "r92"
    king_end = 800.0
    geometry = RouteGeometry(
        route_id=route_id,
        points=(
            frame.from_xy(-2 * step, 0.0),
            frame.from_xy(king_end, 0.0),
            frame.from_xy(1640.0, 0.0),
        ),
        street_names=("King St", "Queen St"),
    )
    roads = (
        RoadLine(name="King St", points=(geometry.points[0], geometry.points[1])),
        RoadLine(name="Queen St", points=(geometry.points[1], geometry.points[2])),
        RoadLine(
            name="Elm Ave",
            points=(
                frame.from_xy(king_end, -120.0),
                frame.from_xy(king_end, 0.0),
                frame.from_xy(king_end, 120.0),
            ),
        ),
    )
    station_xy = [
        ("s9201", 0.0, 0.0),
        ("s9202", 400.0, 0.0),
        ("s9203", 1200.0, 0.0),
        ("s9204", 1600.0, 0.0),
    ]
    bundle = _fixture_bundle(route_id, "92", frame, station_xy)
    trip = _tuples_from_path(route_id, "t9201", frame, path, start_ts)
    visits, crossing, split = _fixture_expectations(
        path, activities, station_xy, mid_x=king_end, cross_x=king_end
    )
    return LabeledFixture(
        route_id=route_id,
        trip=trip,
        motions=tuple(motions),
        activities=tuple(activities),
        frame=frame,
        bundle=bundle,
        geometry=geometry,
        roads=roads,
        offroute_indexes=offroute,
        expected_visits=visits,
        intersection_indexes=crossing,
        midpoint_split=split,
    )
