"""Scalar and summary measures over geometries: area, length, centroid, envelope."""

from __future__ import annotations

import math

from ..errors import UnsupportedGeometry, ZeroMeasure
from ..gml import (
    BBox,
    LineString,
    MultiLineString,
    MultiPoint,
    MultiPolygon,
    Point,
    Polygon,
    compute_bbox,
    ring_signed_area,
)

_AREA_EPS = 1e-12


def area(geometry) -> float:
    """Enclosed area; zero for points and lines, holes subtracted for polygons."""
    if isinstance(geometry, (Point, MultiPoint, LineString, MultiLineString)):
        return 0.0
    if isinstance(geometry, Polygon):
        return sum(ring_signed_area(r) for r in geometry.rings())
    if isinstance(geometry, MultiPolygon):
        return sum(area(p) for p in geometry.polygons)
    raise UnsupportedGeometry(f"no area for {type(geometry).__name__}")


def length(geometry) -> float:
    """Path length; perimeter for polygons, zero for points."""
    if isinstance(geometry, (Point, MultiPoint)):
        return 0.0
    if isinstance(geometry, LineString):
        return sum(math.dist(a, b) for a, b in zip(geometry.points, geometry.points[1:]))
    if isinstance(geometry, MultiLineString):
        return sum(length(l) for l in geometry.lines)
    if isinstance(geometry, Polygon):
        return sum(
            math.dist(a, b) for ring in geometry.rings() for a, b in zip(ring, ring[1:])
        )
    if isinstance(geometry, MultiPolygon):
        return sum(length(p) for p in geometry.polygons)
    raise UnsupportedGeometry(f"no length for {type(geometry).__name__}")


def _line_moments(points):
    total = 0.0
    mx = 0.0
    my = 0.0
    for a, b in zip(points, points[1:]):
        seg = math.dist(a, b)
        total += seg
        mx += seg * (a[0] + b[0]) * 0.5
        my += seg * (a[1] + b[1]) * 0.5
    return total, mx, my


def _ring_moments(ring, origin):
    # moments about a local origin to keep far-from-origin rings well-conditioned
    ox, oy = origin
    a2 = 0.0
    mx = 0.0
    my = 0.0
    for (p1x, p1y), (p2x, p2y) in zip(ring, ring[1:]):
        x1, y1 = p1x - ox, p1y - oy
        x2, y2 = p2x - ox, p2y - oy
        w = x1 * y2 - x2 * y1
        a2 += w
        mx += (x1 + x2) * w
        my += (y1 + y2) * w
    return a2 / 2.0, mx / 6.0, my / 6.0


def centroid(geometry) -> Point:
    """Center of mass of the geometry's dominant measure.

    Points average, lines weight by segment length, polygons weight by
    signed ring area (so holes pull their mass back out).  Degenerate
    inputs whose measure vanishes have no defined centroid.
    """
    srs = geometry.srs_id
    if isinstance(geometry, Point):
        return Point(geometry.x, geometry.y, srs_id=srs)
    if isinstance(geometry, MultiPoint):
        n = len(geometry.points)
        return Point(
            sum(p.x for p in geometry.points) / n,
            sum(p.y for p in geometry.points) / n,
            srs_id=srs,
        )
    if isinstance(geometry, (LineString, MultiLineString)):
        lines = (geometry,) if isinstance(geometry, LineString) else geometry.lines
        total = mx = my = 0.0
        for line in lines:
            t, x, y = _line_moments(line.points)
            total += t
            mx += x
            my += y
        if total <= _AREA_EPS:
            raise ZeroMeasure("line has zero length, centroid is undefined")
        return Point(mx / total, my / total, srs_id=srs)
    if isinstance(geometry, (Polygon, MultiPolygon)):
        polys = (geometry,) if isinstance(geometry, Polygon) else geometry.polygons
        origin = polys[0].exterior[0]
        a = mx = my = 0.0
        for poly in polys:
            for ring in poly.rings():
                ra, rx, ry = _ring_moments(ring, origin)
                a += ra
                mx += rx
                my += ry
        if abs(a) <= _AREA_EPS:
            raise ZeroMeasure("polygon has zero area, centroid is undefined")
        return Point(origin[0] + mx / a, origin[1] + my / a, srs_id=srs)
    raise UnsupportedGeometry(f"no centroid for {type(geometry).__name__}")


def envelope(geometry) -> Polygon:
    """Axis-aligned bounding rectangle as a polygon (degenerate when flat)."""
    box: BBox = compute_bbox(geometry)
    ring = (
        (box.min_x, box.min_y),
        (box.max_x, box.min_y),
        (box.max_x, box.max_y),
        (box.min_x, box.max_y),
        (box.min_x, box.min_y),
    )
    return Polygon(ring, srs_id=geometry.srs_id)
