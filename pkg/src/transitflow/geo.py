"""Local planar frames for city-scale distance work.

All geometry in the pipeline runs through a LocalFrame: an azimuthal
equidistant projection centered near the data (a trip's first tuple, or a
route's first vertex). Within the 50 km validity radius the projected
Euclidean distance tracks the great-circle distance to about 1e-5 relative
error, and because the projection is a fixed point map, distances through it
form a true metric (exact triangle inequality), which a per-pair scale
correction would not give.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FrameRangeError

EARTH_RADIUS_M = 6371008.8

_DEG = math.pi / 180.0

Point = tuple[float, float]  # (lat, lng) decimal degrees WGS84


@dataclass(frozen=True, slots=True)
class LocalFrame:
    """Planar frame anchored at an origin point.

    The meters-per-degree factors describe the frame's first-order scale at
    the origin; they are what the synthetic generator and grid builders use
    to size things in meters.
    """

    origin_lat: float
    origin_lng: float
    meters_per_deg_north: float
    meters_per_deg_east: float
    max_range_m: float = 50_000.0

    @classmethod
    def centered_on(cls, lat: float, lng: float, max_range_m: float = 50_000.0) -> "LocalFrame":
        m_north = EARTH_RADIUS_M * _DEG
        return cls(lat, lng, m_north, m_north * math.cos(lat * _DEG), max_range_m)

    def to_xy(self, lat: float, lng: float) -> tuple[float, float]:
        """Project a point to frame meters (east = x, north = y)."""
        p0 = self.origin_lat * _DEG
        p = lat * _DEG
        dl = (lng - self.origin_lng) * _DEG
        sp0, cp0 = math.sin(p0), math.cos(p0)
        sp, cp = math.sin(p), math.cos(p)
        # Half-angle form of the angular distance: acos(cos_c) loses ~10 cm
        # near the origin, this stays accurate to float round-off.
        h = math.sin((p - p0) / 2.0) ** 2 + cp0 * cp * math.sin(dl / 2.0) ** 2
        c = 2.0 * math.asin(min(1.0, math.sqrt(h)))
        if c == 0.0:
            return (0.0, 0.0)
        k = EARTH_RADIUS_M * c / math.sin(c)
        x = k * cp * math.sin(dl)
        y = k * (cp0 * sp - sp0 * cp * math.cos(dl))
        return (x, y)

    def from_xy(self, x: float, y: float) -> Point:
        """Inverse projection; exact to float round-off inside the frame."""
        rho = math.hypot(x, y)
        if rho < 1e-9:
            return (self.origin_lat, self.origin_lng)
        c = rho / EARTH_RADIUS_M
        p0 = self.origin_lat * _DEG
        sin_c, cos_c = math.sin(c), math.cos(c)
        lat = math.asin(cos_c * math.sin(p0) + y * sin_c * math.cos(p0) / rho)
        lng = self.origin_lng * _DEG + math.atan2(
            x * sin_c, rho * cos_c * math.cos(p0) - y * sin_c * math.sin(p0)
        )
        return (lat / _DEG, lng / _DEG)

    def contains(self, lat: float, lng: float) -> bool:
        x, y = self.to_xy(lat, lng)
        return math.hypot(x, y) <= self.max_range_m

    def require(self, lat: float, lng: float) -> tuple[float, float]:
        """Project, raising FrameRangeError outside the validity radius."""
        x, y = self.to_xy(lat, lng)
        if math.hypot(x, y) > self.max_range_m:
            raise FrameRangeError(
                f"point ({lat:.5f}, {lng:.5f}) is {math.hypot(x, y) / 1000.0:.1f} km from "
                f"frame origin; frame is valid to {self.max_range_m / 1000.0:.0f} km"
            )
        return (x, y)


def planar_distance(a: Point, b: Point, frame: LocalFrame) -> float:
    """Euclidean distance in meters between two lat/lng points in the frame.

    Symmetric, nonnegative, and a true metric over the frame's validity disc.
    Raises FrameRangeError if either point falls outside that disc.
    """
    xa, ya = frame.require(a[0], a[1])
    xb, yb = frame.require(b[0], b[1])
    return math.hypot(xb - xa, yb - ya)
