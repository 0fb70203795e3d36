"""Brute-force reference implementations used to cross-check the pipeline.

Everything here recomputes results from first principles — haversine rather
than the projected frame, exhaustive segment scans rather than the grid — and
deliberately shares no arithmetic with the modules it checks.
"""

from __future__ import annotations

import math
from typing import Sequence

from .model import MotionLabel, RawTuple
from .schema import STOP_MOVE_THRESHOLD_M, WRONG_STREET_SEGMENT, ZONE_RADIUS_M

_R = 6371008.8
Point = tuple[float, float]
Leg = tuple[Point, Point, str]  # (start, end, street name)


def haversine_m(a: Point, b: Point) -> float:
    """Great-circle distance in meters."""
    p1 = math.radians(a[0])
    p2 = math.radians(b[0])
    dp = p2 - p1
    dl = math.radians(b[1] - a[1])
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * _R * math.asin(math.sqrt(h))


def oracle_stop_move(trip: Sequence[RawTuple], threshold_m: float = STOP_MOVE_THRESHOLD_M) -> list[MotionLabel]:
    """Stop/move labels by direct haversine thresholding of consecutive pairs.

    Same contract as the pipeline's detector: the first tuple is a stop, each
    later tuple is a move iff it lies strictly more than ``threshold_m`` from
    its predecessor.
    """
    labels: list[MotionLabel] = []
    prev: Point | None = None
    for t in trip:
        cur = (t.lat, t.lng)
        if prev is None:
            labels.append(MotionLabel.STOP)
        else:
            d = haversine_m(prev, cur)
            labels.append(MotionLabel.MOVE if d > threshold_m else MotionLabel.STOP)
        prev = cur
    return labels


def _segment_distance_m(p: Point, a: Point, b: Point) -> float:
    # Exact planar point-to-segment distance in a tangent plane centered on
    # the query point; scale error is negligible at buffer-decision ranges.
    m_lat = _R * math.pi / 180.0
    m_lng = m_lat * math.cos(math.radians(p[0]))
    ax = (a[1] - p[1]) * m_lng
    ay = (a[0] - p[0]) * m_lat
    bx = (b[1] - p[1]) * m_lng
    by = (b[0] - p[0]) * m_lat
    dx, dy = bx - ax, by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return math.hypot(ax, ay)
    # p projects to the origin of this plane
    t = -(ax * dx + ay * dy) / seg_len_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(ax + t * dx, ay + t * dy)


def oracle_nearest_leg(p: Point, legs: Sequence[Leg]) -> tuple[float, int]:
    """Exhaustive scan: (distance, leg index) of the nearest leg to ``p``.

    Ties go to the earlier leg index, mirroring the grid build rule.
    """
    best_d = math.inf
    best_i = -1
    for i, (a, b, _name) in enumerate(legs):
        d = _segment_distance_m(p, a, b)
        if d < best_d:
            best_d, best_i = d, i
    return best_d, best_i


def oracle_grid_lookup(p: Point, legs: Sequence[Leg], radius_m: float = ZONE_RADIUS_M) -> str:
    """Street name of the nearest leg within ``radius_m``, else the sentinel."""
    d, i = oracle_nearest_leg(p, legs)
    if i < 0 or d > radius_m:
        return WRONG_STREET_SEGMENT
    return legs[i][2]
