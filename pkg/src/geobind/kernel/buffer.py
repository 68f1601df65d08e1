"""Fixed-distance buffering by capsule decomposition.

Every geometry dilates into a union of convex building blocks: a point
becomes a regular 2k-gon inscribed in the offset circle, a segment becomes a
capsule (two half-disk caps of k segments each joined by straight flanks),
and an areal input contributes its own region plus one capsule per boundary
edge.  `k` trades arc fidelity for vertex count; caps are inscribed, so the
result underestimates the true offset by at most r*(1 - cos(pi/(2k))).
"""

from __future__ import annotations

import math

from ..errors import NonPositiveDistance, SelfIntersectingInput, UnsupportedGeometry
from ..gml import LineString, Point, Polygon
from .union import Region, region_from_geometry, region_is_simple, region_to_geometry, union_all

DEFAULT_SEGMENTS = 16


def _disk(center, r, k):
    cx, cy = center
    n = 2 * k
    return tuple(
        (cx + r * math.cos(2.0 * math.pi * j / n), cy + r * math.sin(2.0 * math.pi * j / n))
        for j in range(n)
    )


def _capsule(a, b, r, k):
    """Counter-clockwise 2k+2-gon covering all points within r of segment ab.

    Ring order: flank along the right side of ab, cap around b, flank back
    along the left side, cap around a.  Cap vertices are computed from the
    same angle expression on both ends, so capsules of collinear segments
    reproduce shared vertices bit for bit.
    """
    theta = math.atan2(b[1] - a[1], b[0] - a[0])
    step = math.pi / k
    ring = [(a[0] + r * math.cos(theta - math.pi / 2), a[1] + r * math.sin(theta - math.pi / 2))]
    for j in range(k + 1):
        phi = theta - math.pi / 2 + j * step
        ring.append((b[0] + r * math.cos(phi), b[1] + r * math.sin(phi)))
    for j in range(k):
        phi = theta + math.pi / 2 + j * step
        ring.append((a[0] + r * math.cos(phi), a[1] + r * math.sin(phi)))
    return tuple(ring)


def _dedupe(points):
    out = []
    for p in points:
        if not out or p != out[-1]:
            out.append(p)
    return out


def _segment_regions(points, r, k):
    pts = _dedupe(points)
    if len(pts) == 1:
        return [Region((_disk(pts[0], r, k),))]
    return [Region((_capsule(a, b, r, k),)) for a, b in zip(pts, pts[1:])]


def _boundary_edges(polygon):
    for ring in polygon.rings():
        yield from zip(ring, ring[1:])


def buffer(geometry, distance: float, k: int = DEFAULT_SEGMENTS):
    """All points within `distance` of the geometry, as a (Multi)Polygon."""
    if not (distance > 0.0) or not math.isfinite(distance):
        raise NonPositiveDistance(f"buffer distance must be positive, got {distance!r}")
    if k < 4:
        raise ValueError(f"need at least 4 segments per half-disk, got {k}")

    srs = geometry.srs_id
    if isinstance(geometry, Point):
        parts = [Region((_disk((geometry.x, geometry.y), distance, k),))]
    elif isinstance(geometry, LineString):
        parts = _segment_regions(geometry.points, distance, k)
    elif isinstance(geometry, Polygon):
        base = region_from_geometry(geometry)
        if not region_is_simple(base):
            raise SelfIntersectingInput("cannot buffer a self-intersecting polygon")
        parts = [base]
        for a, b in _boundary_edges(geometry):
            if a != b:
                parts.append(Region((_capsule(a, b, distance, k),)))
    else:
        raise UnsupportedGeometry(
            f"buffer accepts Point, LineString, or Polygon, not {type(geometry).__name__}"
        )

    return region_to_geometry(union_all(parts), srs)
