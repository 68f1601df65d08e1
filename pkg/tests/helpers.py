"""Shared independent oracles for geometry tests.

The membership oracle answers point-in-buffer questions straight from the
definition (distance to the source polyline), without touching any of the
code under test, so kernel results are checked against first principles.
"""

import numpy as np

from geobind.gml import MultiPolygon, Polygon


def polygon_rings(geometry):
    if isinstance(geometry, Polygon):
        return list(geometry.rings())
    if isinstance(geometry, MultiPolygon):
        return [r for p in geometry.polygons for r in p.rings()]
    raise TypeError(type(geometry).__name__)


def points_in_polygon(xs, ys, geometry):
    """Vectorized even-odd containment for arrays of sample points."""
    inside = np.zeros(len(xs), dtype=bool)
    for ring in polygon_rings(geometry):
        arr = np.asarray(ring, dtype=float)
        x1, y1 = arr[:-1, 0], arr[:-1, 1]
        x2, y2 = arr[1:, 0], arr[1:, 1]
        for ex1, ey1, ex2, ey2 in zip(x1, y1, x2, y2):
            straddles = (ey1 > ys) != (ey2 > ys)
            if not straddles.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ex1 + (ys - ey1) * (ex2 - ex1) / (ey2 - ey1)
            inside ^= straddles & (xint > xs)
    return inside


def distance_to_polyline(xs, ys, points):
    """Distance from each sample to the nearest point of an open polyline."""
    best = np.full(len(xs), np.inf)
    pts = np.asarray(points, dtype=float)
    for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            d = np.hypot(xs - ax, ys - ay)
        else:
            t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / seg2, 0.0, 1.0)
            d = np.hypot(xs - (ax + t * dx), ys - (ay + t * dy))
        best = np.minimum(best, d)
    if len(pts) == 1:
        best = np.hypot(xs - pts[0, 0], ys - pts[0, 1])
    return best


def buffer_membership_agreement(result, polyline, radius, samples, seed=0):
    """Fraction of random samples where the polygonal buffer agrees with the
    true distance test, ignoring samples within 1e-6 of the exact offset."""
    rng = np.random.default_rng(seed)
    rings = polygon_rings(result)
    allx = np.concatenate([np.asarray(r)[:, 0] for r in rings])
    ally = np.concatenate([np.asarray(r)[:, 1] for r in rings])
    pad = 0.5 * radius
    xs = rng.uniform(allx.min() - pad, allx.max() + pad, samples)
    ys = rng.uniform(ally.min() - pad, ally.max() + pad, samples)

    truth_d = distance_to_polyline(xs, ys, polyline)
    decisive = np.abs(truth_d - radius) > 1e-6
    truth = truth_d <= radius
    predicted = points_in_polygon(xs, ys, result)
    agree = predicted[decisive] == truth[decisive]
    return float(agree.sum()) / float(decisive.sum())
