"""Planar geometry helpers: local projection, densification, segment distances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .errors import DegenerateSegmentError, InsufficientPointsError, InvalidCoordinateError

EARTH_RADIUS_M = 6_371_000.0


class GeoPoint(NamedTuple):
    lat: float
    lon: float


class CartPoint(NamedTuple):
    """Planar position in meters (x east, y north)."""

    x: float
    y: float


def check_geo(p: GeoPoint) -> GeoPoint:
    lat, lon = p
    if not (math.isfinite(lat) and math.isfinite(lon)):
        raise InvalidCoordinateError(f"non-finite coordinate {p!r}")
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise InvalidCoordinateError(f"coordinate out of range {p!r}")
    return GeoPoint(float(lat), float(lon))


@dataclass(frozen=True)
class ProjectionContext:
    """Reference point of a local equirectangular projection."""

    origin: GeoPoint = GeoPoint(0.0, 0.0)
    earth_radius: float = EARTH_RADIUS_M

    def __post_init__(self):
        object.__setattr__(self, "origin", check_geo(GeoPoint(*self.origin)))
        if not (self.earth_radius > 0 and math.isfinite(self.earth_radius)):
            raise InvalidCoordinateError("earth_radius must be positive")


def to_cartesian(p: GeoPoint, ctx: ProjectionContext) -> CartPoint:
    """Project ``p`` onto the tangent plane at ``ctx.origin``.

    x = R * dlon * cos(lat0), y = R * dlat, angles in radians.
    """
    lat, lon = check_geo(GeoPoint(*p))
    lat0, lon0 = ctx.origin
    x = ctx.earth_radius * math.radians(lon - lon0) * math.cos(math.radians(lat0))
    y = ctx.earth_radius * math.radians(lat - lat0)
    return CartPoint(x, y)


def to_geographic(p: CartPoint, ctx: ProjectionContext) -> GeoPoint:
    """Closed-form inverse of :func:`to_cartesian`."""
    x, y = p
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidCoordinateError(f"non-finite coordinate {p!r}")
    lat0, lon0 = ctx.origin
    coslat = math.cos(math.radians(lat0))
    if coslat <= 0:
        raise InvalidCoordinateError("projection undefined at the poles")
    lat = lat0 + math.degrees(y / ctx.earth_radius)
    lon = lon0 + math.degrees(x / (ctx.earth_radius * coslat))
    return GeoPoint(lat, lon)


def midpoint(a: CartPoint, b: CartPoint) -> CartPoint:
    return CartPoint((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)


def densify(points: Sequence[CartPoint], passes: int = 1) -> list[CartPoint]:
    """Insert the midpoint between every consecutive pair, ``passes`` times.

    One pass turns n points into 2n - 1.
    """
    if len(points) < 2:
        raise InsufficientPointsError(f"need at least 2 points, got {len(points)}")
    out = [CartPoint(*p) for p in points]
    for _ in range(passes):
        dense = [out[0]]
        for a, b in zip(out, out[1:]):
            dense.append(midpoint(a, b))
            dense.append(b)
        out = dense
    return out


def _raw_param(p, a, b) -> tuple[float, float]:
    """Unclamped foot parameter of p on ab and the segment length.

    The direction is rescaled by its largest component first, so segments
    whose squared length would underflow are still handled.
    """
    ax, ay = a
    dx = b[0] - ax
    dy = b[1] - ay
    s = max(abs(dx), abs(dy))
    if s == 0.0:
        raise DegenerateSegmentError(f"segment endpoints coincide at {tuple(a)}")
    ux, uy = dx / s, dy / s
    n2 = ux * ux + uy * uy
    t = ((p[0] - ax) * ux + (p[1] - ay) * uy) / (n2 * s)
    return t, s * math.sqrt(n2)


def _segment_param(p, a, b) -> tuple[float, float]:
    """Return (clamped t in [0, 1], segment length)."""
    t, length = _raw_param(p, a, b)
    return min(1.0, max(0.0, t)), length


def point_segment_distance(p: CartPoint, a: CartPoint, b: CartPoint) -> float:
    """Distance from ``p`` to the closed segment ab."""
    # canonical endpoint order keeps the result bit-identical for (a, b) and (b, a)
    if tuple(b) < tuple(a):
        a, b = b, a
    t, _ = _segment_param(p, a, b)
    fx = a[0] + t * (b[0] - a[0])
    fy = a[1] + t * (b[1] - a[1])
    return math.hypot(p[0] - fx, p[1] - fy)


def project_onto_segment(p: CartPoint, a: CartPoint, b: CartPoint) -> tuple[float, CartPoint]:
    """Clamped orthogonal projection of ``p`` on ab.

    Returns the offset from ``a`` along ab (meters) and the foot point.
    """
    t, length = _segment_param(p, a, b)
    foot = CartPoint(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    return t * length, foot


def segment_param_unclamped(p: CartPoint, a: CartPoint, b: CartPoint) -> float:
    """Position of p's orthogonal foot along ab as a fraction (may fall outside [0, 1])."""
    return _raw_param(p, a, b)[0]


def polyline_length(points: Sequence[CartPoint]) -> float:
    return sum(math.dist(a, b) for a, b in zip(points, points[1:]))


def project_onto_polyline(p: CartPoint, points: Sequence[CartPoint]) -> tuple[float, float]:
    """Return (distance, offset along the polyline) of the nearest polyline point.

    Zero-length pieces are skipped; ties keep the earliest piece.
    """
    best = (math.inf, 0.0)
    walked = 0.0
    for a, b in zip(points, points[1:]):
        if a == b:
            continue
        off, foot = project_onto_segment(p, a, b)
        d = math.dist(p, foot)
        if d < best[0]:
            best = (d, walked + off)
        walked += math.dist(a, b)
    return best
