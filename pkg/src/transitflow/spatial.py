"""Spatial reference artifacts: zones, zone indexes, and the street grid.

Everything here is built once per run from GTFS and geometry files, then
shared read-only by the per-trip contextualization workers. All distance
work happens in a local planar frame (see geo.LocalFrame); builders take
lat/lng inputs and project internally.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

from . import schema
from .errors import GeometryError
from .geo import LocalFrame

if TYPE_CHECKING:
    from .gtfs import GtfsBundle

Point = tuple[float, float]  # (lat, lng)


@dataclass(frozen=True, slots=True)
class CircularZone:
    center_lat: float
    center_lng: float
    radius_m: float
    kind: str  # "station" or "intersection"
    anchor_id: str

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError(f"zone radius must be positive, got {self.radius_m}")

    def contains(self, lat: float, lng: float, frame: LocalFrame) -> bool:
        px, py = frame.to_xy(lat, lng)
        cx, cy = frame.to_xy(self.center_lat, self.center_lng)
        return math.hypot(px - cx, py - cy) <= self.radius_m


def build_station_zones(bundle: "GtfsBundle", radius_m: float = schema.ZONE_RADIUS_M,
                        station_ids: Iterable[str] | None = None) -> list[CircularZone]:
    """One zone per station, centered exactly on its GTFS coordinates."""
    if station_ids is None:
        stations = [bundle.stations[sid] for sid in sorted(bundle.stations)]
    else:
        stations = [bundle.stations[sid] for sid in sorted(station_ids)]
    return [
        CircularZone(
            center_lat=s.lat,
            center_lng=s.lng,
            radius_m=radius_m,
            kind="station",
            anchor_id=s.station_id,
        )
        for s in stations
    ]


class ZoneIndex:
    """Uniform hash grid over zone centers for O(1) containment queries.

    The bucket size is the largest zone radius, so any zone containing a
    query point has its center within the 3x3 bucket neighborhood. On
    overlap the nearest center wins; exact distance ties break to the
    lexicographically smaller anchor id.
    """

    def __init__(self, zones: Sequence[CircularZone], frame: LocalFrame):
        self.frame = frame
        self.zones = list(zones)
        self._cell = max((z.radius_m for z in self.zones), default=1.0)
        self._buckets: dict[tuple[int, int], list[int]] = {}
        self._centers: list[tuple[float, float]] = []
        for idx, z in enumerate(self.zones):
            cx, cy = frame.to_xy(z.center_lat, z.center_lng)
            self._centers.append((cx, cy))
            key = (math.floor(cx / self._cell), math.floor(cy / self._cell))
            self._buckets.setdefault(key, []).append(idx)

    def query_xy(self, x: float, y: float) -> CircularZone | None:
        ci = math.floor(x / self._cell)
        cj = math.floor(y / self._cell)
        best: tuple[float, str, int] | None = None
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for idx in self._buckets.get((ci + di, cj + dj), ()):
                    cx, cy = self._centers[idx]
                    d = math.hypot(x - cx, y - cy)
                    zone = self.zones[idx]
                    if d <= zone.radius_m:
                        cand = (d, zone.anchor_id, idx)
                        if best is None or cand[:2] < best[:2]:
                            best = cand
        return None if best is None else self.zones[best[2]]

    def query(self, lat: float, lng: float) -> CircularZone | None:
        x, y = self.frame.to_xy(lat, lng)
        return self.query_xy(x, y)


@dataclass(frozen=True, slots=True)
class RouteGeometry:
    """A route polyline with one street-segment name per leg."""

    route_id: str
    points: tuple[Point, ...]
    street_names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.points) >= 2 and len(self.street_names) != len(self.points) - 1:
            raise GeometryError(
                f"route {self.route_id}: {len(self.points)} points need "
                f"{len(self.points) - 1} street names, got {len(self.street_names)}"
            )

    def legs_xy(self, frame: LocalFrame) -> list[tuple[float, float, float, float]]:
        xy = [frame.to_xy(lat, lng) for lat, lng in self.points]
        return [(xy[i][0], xy[i][1], xy[i + 1][0], xy[i + 1][1]) for i in range(len(xy) - 1)]


@dataclass(frozen=True, slots=True)
class RoadLine:
    """A named road-network polyline (input to intersection derivation)."""

    name: str
    points: tuple[Point, ...]


def point_segment_distance_xy(px: float, py: float, ax: float, ay: float,
                              bx: float, by: float) -> float:
    """Exact planar distance from a point to a segment."""
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = vx * vx + vy * vy
    if vv == 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / vv
    if t <= 0.0:
        return math.hypot(wx, wy)
    if t >= 1.0:
        return math.hypot(px - bx, py - by)
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy))


class RouteBufferGrid:
    """10 m cell grid tagging the 30 m buffer along a route with street names.

    Cells are axis-aligned squares in the route's local frame, anchored at
    the frame origin; a cell is tagged when its center lies within the
    buffer half-width of some leg, with the nearest leg's name (ties to the
    lowest leg index). Lookup is a dict probe on the cell index.
    """

    def __init__(self, route_id: str, frame: LocalFrame, cell_m: float,
                 half_width_m: float, tags: dict[tuple[int, int], str]):
        self.route_id = route_id
        self.frame = frame
        self.cell_m = cell_m
        self.half_width_m = half_width_m
        self.tags = tags

    def cell_index_xy(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.cell_m), math.floor(y / self.cell_m))

    def cell_center_xy(self, cell: tuple[int, int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.cell_m, (cell[1] + 0.5) * self.cell_m)

    def lookup_xy(self, x: float, y: float) -> str:
        return self.tags.get(self.cell_index_xy(x, y), schema.WRONG_STREET_SEGMENT)

    def lookup(self, lat: float, lng: float) -> str:
        x, y = self.frame.to_xy(lat, lng)
        return self.lookup_xy(x, y)

    def export_csv(self, path: str | Path) -> int:
        """Debug dump: one row per tagged cell, sorted by cell index."""
        n = 0
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cell_i", "cell_j", "center_lat", "center_lng", "tag"])
            for cell in sorted(self.tags):
                cx, cy = self.cell_center_xy(cell)
                lat, lng = self.frame.from_xy(cx, cy)
                writer.writerow([cell[0], cell[1], repr(lat), repr(lng), self.tags[cell]])
                n += 1
        return n


def rasterize_buffer(legs_xy: Sequence[tuple[float, float, float, float]],
                     names: Sequence[str], cell_m: float,
                     half_width_m: float) -> dict[tuple[int, int], str]:
    """Tag every cell whose center is within half_width_m of some leg.

    Pure planar core of the grid build; separated so the tie rule is
    testable on exact coordinates.
    """
    best: dict[tuple[int, int], tuple[float, int]] = {}
    for k, (ax, ay, bx, by) in enumerate(legs_xy):
        if not names[k]:
            raise GeometryError(f"leg {k} has no street name")
        lo_i = math.floor((min(ax, bx) - half_width_m) / cell_m)
        hi_i = math.floor((max(ax, bx) + half_width_m) / cell_m)
        lo_j = math.floor((min(ay, by) - half_width_m) / cell_m)
        hi_j = math.floor((max(ay, by) + half_width_m) / cell_m)
        for i in range(lo_i, hi_i + 1):
            cx = (i + 0.5) * cell_m
            for j in range(lo_j, hi_j + 1):
                cy = (j + 0.5) * cell_m
                d = point_segment_distance_xy(cx, cy, ax, ay, bx, by)
                if d > half_width_m:
                    continue
                prev = best.get((i, j))
                if prev is None or d < prev[0]:
                    best[(i, j)] = (d, k)
    return {cell: names[leg] for cell, (_, leg) in best.items()}


def build_route_buffer_grid(geometry: RouteGeometry, frame: LocalFrame,
                            cell_m: float = schema.GRID_CELL_M,
                            half_width_m: float = schema.BUFFER_HALF_WIDTH_M) -> RouteBufferGrid:
    if len(geometry.points) < 2:
        raise GeometryError(f"route {geometry.route_id}: polyline needs >= 2 points")
    tags = rasterize_buffer(geometry.legs_xy(frame), geometry.street_names, cell_m, half_width_m)
    return RouteBufferGrid(
        route_id=geometry.route_id,
        frame=frame,
        cell_m=cell_m,
        half_width_m=half_width_m,
        tags=tags,
    )


def derive_intersections(roads: Sequence[RoadLine],
                         radius_m: float = schema.ZONE_RADIUS_M,
                         snap_m: float = 1.0) -> list[CircularZone]:
    """Zones at every point where >= 3 road legs share an endpoint.

    Endpoints are snapped to a snap_m grid in a frame anchored at the
    lexicographically smallest vertex, so results do not depend on input
    order. Ids run ix0001, ix0002, ... by sorted intersection coordinates.
    """
    all_points = [p for road in roads for p in road.points]
    if not all_points:
        return []
    anchor = min(all_points)
    frame = LocalFrame.centered_on(anchor[0], anchor[1])

    degree: dict[tuple[int, int], int] = {}
    members: dict[tuple[int, int], set[Point]] = {}
    for road in roads:
        pts = road.points
        for idx, p in enumerate(pts):
            legs_here = (1 if idx > 0 else 0) + (1 if idx < len(pts) - 1 else 0)
            if legs_here == 0:
                continue
            x, y = frame.to_xy(p[0], p[1])
            key = (round(x / snap_m), round(y / snap_m))
            degree[key] = degree.get(key, 0) + legs_here
            members.setdefault(key, set()).add(p)

    centers: list[Point] = []
    for key, deg in degree.items():
        if deg >= 3:
            pts = sorted(members[key])  # fixed order so the mean is reproducible
            lat = sum(p[0] for p in pts) / len(pts)
            lng = sum(p[1] for p in pts) / len(pts)
            centers.append((lat, lng))
    centers.sort()
    return [
        CircularZone(
            center_lat=lat,
            center_lng=lng,
            radius_m=radius_m,
            kind="intersection",
            anchor_id=f"ix{n:04d}",
        )
        for n, (lat, lng) in enumerate(centers, start=1)
    ]


@dataclass(frozen=True, slots=True)
class RouteMidpoint:
    route_id: str
    lat: float
    lng: float


def route_midpoint(geometry: RouteGeometry, frame: LocalFrame) -> RouteMidpoint:
    """The point at half the polyline's arc length."""
    if len(geometry.points) < 2:
        raise GeometryError(f"route {geometry.route_id}: polyline needs >= 2 points")
    xy = [frame.to_xy(lat, lng) for lat, lng in geometry.points]
    seg_lengths = [
        math.hypot(xy[i + 1][0] - xy[i][0], xy[i + 1][1] - xy[i][1])
        for i in range(len(xy) - 1)
    ]
    total = sum(seg_lengths)
    if total == 0.0:
        raise GeometryError(f"route {geometry.route_id}: polyline has zero length")
    target = total / 2.0
    walked = 0.0
    for i, seg in enumerate(seg_lengths):
        if walked + seg >= target and seg > 0.0:
            t = (target - walked) / seg
            x = xy[i][0] + t * (xy[i + 1][0] - xy[i][0])
            y = xy[i][1] + t * (xy[i + 1][1] - xy[i][1])
            lat, lng = frame.from_xy(x, y)
            return RouteMidpoint(route_id=geometry.route_id, lat=lat, lng=lng)
        walked += seg
    lat, lng = geometry.points[-1]
    return RouteMidpoint(route_id=geometry.route_id, lat=lat, lng=lng)


def load_geometry(path: str | Path) -> tuple[dict[str, RouteGeometry], list[RoadLine]]:
    """Read route and road layers from one GeoJSON FeatureCollection.

    Route features carry route_id plus street_names (one per leg) or a
    single name applied to every leg; several features may share a
    route_id and are concatenated in file order. Features with a name but
    no route_id form the road-network layer.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise GeometryError(f"cannot read geometry file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise GeometryError(f"geometry file {path} is not valid JSON: {exc}") from exc
    if doc.get("type") != "FeatureCollection":
        raise GeometryError(f"{path}: expected a GeoJSON FeatureCollection")

    route_points: dict[str, list[Point]] = {}
    route_names: dict[str, list[str]] = {}
    roads: list[RoadLine] = []
    for feature in doc.get("features", []):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "LineString":
            raise GeometryError(f"{path}: unsupported geometry type {geom.get('type')!r}")
        coords = geom.get("coordinates") or []
        if len(coords) < 2:
            raise GeometryError(f"{path}: LineString needs >= 2 coordinates")
        points = [(float(lat), float(lng)) for lng, lat in coords]
        props = feature.get("properties") or {}
        n_legs = len(points) - 1
        if "route_id" in props:
            route_id = str(props["route_id"])
            if "street_names" in props:
                names = [str(n) for n in props["street_names"]]
                if len(names) != n_legs:
                    raise GeometryError(
                        f"{path}: route {route_id} has {n_legs} legs but "
                        f"{len(names)} street_names"
                    )
            else:
                names = [str(props.get("name", ""))] * n_legs
            acc_pts = route_points.setdefault(route_id, [])
            acc_names = route_names.setdefault(route_id, [])
            if acc_pts and acc_pts[-1] == points[0]:
                acc_pts.extend(points[1:])
            else:
                acc_pts.extend(points)
            acc_names.extend(names)
        elif "name" in props:
            roads.append(RoadLine(name=str(props["name"]), points=tuple(points)))
        else:
            raise GeometryError(f"{path}: feature lacks both route_id and name")

    routes: dict[str, RouteGeometry] = {}
    for route_id, pts in route_points.items():
        names = route_names[route_id]
        if len(names) != len(pts) - 1:
            raise GeometryError(
                f"{path}: route {route_id} merged to {len(pts)} points but "
                f"{len(names)} street names"
            )
        routes[route_id] = RouteGeometry(
            route_id=route_id, points=tuple(pts), street_names=tuple(names)
        )
    return routes, roads


def write_geometry(path: str | Path, routes: Iterable[RouteGeometry],
                   roads: Iterable[RoadLine] = ()) -> None:
    features = []
    for rg in sorted(routes, key=lambda r: r.route_id):
        features.append({
            "type": "Feature",
            "properties": {"route_id": rg.route_id, "street_names": list(rg.street_names)},
            "geometry": {
                "type": "LineString",
                "coordinates": [[lng, lat] for lat, lng in rg.points],
            },
        })
    for road in roads:
        features.append({
            "type": "Feature",
            "properties": {"name": road.name},
            "geometry": {
                "type": "LineString",
                "coordinates": [[lng, lat] for lat, lng in road.points],
            },
        })
    doc = {"type": "FeatureCollection", "features": features}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
