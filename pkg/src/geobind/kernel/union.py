"""Planar region overlay.

A region is an even-odd set of open rings: shells wind counter-clockwise,
holes clockwise.  `union` overlays two regions by noding both boundaries at
their proper crossings and keeping the sub-edges whose midpoints fall outside
the other region; the kept edges stitch back into closed rings because every
crossing vertex has exactly one kept continuation.

Boundaries that touch without properly crossing (shared vertices, endpoint
contact, collinear overlap) cannot be noded directly.  The second operand is
shifted by (delta, delta**2) and the overlay retried, escalating through a
short ladder of larger shifts; output vertices within 2.5*delta of an
original input vertex are snapped back afterwards, so exact touching
survives a round trip through the perturbation.  If no rung of the ladder
yields a clean arrangement, DegenerateIntersection is raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import DegenerateIntersection
from ..gml import MultiPolygon, Polygon

# Parameter-space window around 0 and 1 inside which an edge-edge contact
# counts as touching rather than crossing, and the matching collinearity
# tolerance.  Both are far below the smallest perturbation shift, so a
# shifted arrangement can actually escape the window.
_EPS_PARAM = 1e-13
_EPS_COLL = 1e-13

# Perturbation ladder: the canonical (delta, delta**2) tiebreak first, then
# escalating shifts with a slope no boundary edge is likely to share, because
# delta**2 = 1e-24 vanishes below double resolution and leaves exactly
# horizontal contacts unbroken.
_GOLDEN = 0.6180339887498949
_SHIFTS = (
    (0.0, 0.0),
    (1e-12, 1e-24),
    (1e-12, _GOLDEN * 1e-12),
    (1e-11, _GOLDEN * 1e-11),
    (1e-10, _GOLDEN * 1e-10),
)
_SNAP_FACTOR = 2.5
_MIN_RING_AREA = 1e-9

_NONE, _PROPER, _DEGEN = 0, 1, 2


@dataclass(frozen=True)
class Region:
    """Even-odd planar point set; rings are open (no repeated closing vertex)."""

    rings: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "rings", tuple(tuple((float(x), float(y)) for x, y in r) for r in self.rings)
        )


def ring_area(ring) -> float:
    """Shoelace signed area of an open ring."""
    total = 0.0
    x1, y1 = ring[-1]
    for x2, y2 in ring:
        total += x1 * y2 - x2 * y1
        x1, y1 = x2, y2
    return total / 2.0


def region_area(region: Region) -> float:
    return sum(ring_area(r) for r in region.rings)


def _point_in_rings(pt, rings) -> bool:
    px, py = pt
    inside = False
    for ring in rings:
        x1, y1 = ring[-1]
        for x2, y2 in ring:
            if (y1 > py) != (y2 > py):
                if x1 + (py - y1) * (x2 - x1) / (y2 - y1) > px:
                    inside = not inside
            x1, y1 = x2, y2
    return inside


def point_in_region(pt, region: Region) -> bool:
    """Even-odd containment test (boundary points are not well-defined)."""
    return _point_in_rings(pt, region.rings)


def _edge_list(region: Region):
    edges = []
    for ring in region.rings:
        n = len(ring)
        for i in range(n):
            edges.append((ring[i], ring[(i + 1) % n]))
    return edges


def _classify(p1, p2, q1, q2):
    """Relate two segments: (_NONE|_PROPER|_DEGEN, t, u, crossing point)."""
    d1x = p2[0] - p1[0]
    d1y = p2[1] - p1[1]
    d2x = q2[0] - q1[0]
    d2y = q2[1] - q1[1]
    ex = q1[0] - p1[0]
    ey = q1[1] - p1[1]
    len1 = math.hypot(d1x, d1y)
    len2 = math.hypot(d2x, d2y)
    if len1 == 0.0 or len2 == 0.0:
        return _DEGEN, 0.0, 0.0, None

    denom = d1x * d2y - d1y * d2x
    if abs(denom) <= _EPS_COLL * len1 * len2:
        # parallel: a problem only when collinear and in contact
        if abs(ex * d1y - ey * d1x) > _EPS_COLL * len1 * max(len1, len2):
            return _NONE, 0.0, 0.0, None
        inv = 1.0 / (len1 * len1)
        s1 = (ex * d1x + ey * d1y) * inv
        s2 = s1 + (d2x * d1x + d2y * d1y) * inv
        if max(s1, s2) < -_EPS_PARAM or min(s1, s2) > 1.0 + _EPS_PARAM:
            return _NONE, 0.0, 0.0, None
        return _DEGEN, 0.0, 0.0, None

    t = (ex * d2y - ey * d2x) / denom
    u = (ex * d1y - ey * d1x) / denom
    if t < -_EPS_PARAM or t > 1.0 + _EPS_PARAM or u < -_EPS_PARAM or u > 1.0 + _EPS_PARAM:
        return _NONE, 0.0, 0.0, None
    if t < _EPS_PARAM or t > 1.0 - _EPS_PARAM or u < _EPS_PARAM or u > 1.0 - _EPS_PARAM:
        return _DEGEN, 0.0, 0.0, None
    return _PROPER, t, u, (p1[0] + t * d1x, p1[1] + t * d1y)


def _bounds(edges):
    out = []
    for (x1, y1), (x2, y2) in edges:
        out.append((min(x1, x2), min(y1, y2), max(x1, x2), max(y1, y2)))
    return out


def _node(a_edges, b_edges):
    """Split points per edge index, or None when any pair touches degenerately.

    Each crossing is computed once and the same point tuple is recorded on
    both edges, so stitching can match vertices by exact equality.
    """
    pad = 1e-9
    boxes_b = _bounds(b_edges)
    splits_a = {}
    splits_b = {}
    for i, (p1, p2) in enumerate(a_edges):
        ax1 = min(p1[0], p2[0]) - pad
        ay1 = min(p1[1], p2[1]) - pad
        ax2 = max(p1[0], p2[0]) + pad
        ay2 = max(p1[1], p2[1]) + pad
        for j, (q1, q2) in enumerate(b_edges):
            bx1, by1, bx2, by2 = boxes_b[j]
            if bx1 > ax2 or bx2 < ax1 or by1 > ay2 or by2 < ay1:
                continue
            kind, t, u, pt = _classify(p1, p2, q1, q2)
            if kind == _DEGEN:
                return None
            if kind == _PROPER:
                splits_a.setdefault(i, []).append((t, pt))
                splits_b.setdefault(j, []).append((u, pt))
    return splits_a, splits_b


def _turn(din, s, e):
    dout = (e[0] - s[0], e[1] - s[1])
    return math.atan2(din[0] * dout[1] - din[1] * dout[0], din[0] * dout[0] + din[1] * dout[1])


def _stitch(a: Region, b: Region, a_edges, b_edges, splits_a, splits_b):
    sub = []
    for edges, splits, other in ((a_edges, splits_a, b), (b_edges, splits_b, a)):
        for idx, (p, q) in enumerate(edges):
            cuts = splits.get(idx)
            if cuts:
                pts = [p]
                for _, pt in sorted(cuts, key=lambda c: c[0]):
                    if pt != pts[-1]:
                        pts.append(pt)
                if q != pts[-1]:
                    pts.append(q)
            else:
                pts = (p, q)
            for s, e in zip(pts, pts[1:]):
                mid = ((s[0] + e[0]) * 0.5, (s[1] + e[1]) * 0.5)
                if not point_in_region(mid, other):
                    sub.append((s, e))

    outgoing = {}
    for i, (s, _) in enumerate(sub):
        outgoing.setdefault(s, []).append(i)

    used = [False] * len(sub)
    rings = []
    for start in range(len(sub)):
        if used[start]:
            continue
        start_v = sub[start][0]
        ring = []
        cur = start
        for _ in range(len(sub) + 1):
            used[cur] = True
            s, e = sub[cur]
            ring.append(s)
            if e == start_v:
                break
            cands = [i for i in outgoing.get(e, ()) if not used[i]]
            if not cands:
                raise DegenerateIntersection("union boundary walk broke at an open vertex")
            if len(cands) == 1:
                cur = cands[0]
            else:
                # several continuations only at an unusually tangled vertex:
                # take the sharpest left turn to keep the interior on the left
                din = (e[0] - s[0], e[1] - s[1])
                cur = max(cands, key=lambda i: _turn(din, *sub[i]))
        else:
            raise DegenerateIntersection("union boundary walk did not close")
        rings.append(tuple(ring))
    return rings


def _shift(region: Region, dx: float, dy: float) -> Region:
    return Region(tuple(tuple((x + dx, y + dy) for x, y in r) for r in region.rings))


def _snap_back(rings, originals, tol):
    cell = tol
    index = {}
    for v in originals:
        index.setdefault((round(v[0] / cell), round(v[1] / cell)), []).append(v)
    tol2 = tol * tol

    def snap(v):
        kx = round(v[0] / cell)
        ky = round(v[1] / cell)
        best = None
        best_d = tol2
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for o in index.get((kx + dx, ky + dy), ()):
                    d = (o[0] - v[0]) ** 2 + (o[1] - v[1]) ** 2
                    if d <= best_d:
                        best_d = d
                        best = o
        return v if best is None else best

    return [tuple(snap(v) for v in ring) for ring in rings]


def _clean_ring(ring):
    out = []
    for v in ring:
        if not out or v != out[-1]:
            out.append(v)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    if len(out) < 3 or abs(ring_area(out)) < _MIN_RING_AREA:
        return None
    return tuple(out)


def union(a: Region, b: Region) -> Region:
    """Boolean union of two regions."""
    if not a.rings:
        return b
    if not b.rings:
        return a
    if a == b:
        return a
    a_edges = _edge_list(a)
    originals = None
    for dx, dy in _SHIFTS:
        shifted = _shift(b, dx, dy) if dx else b
        b_edges = _edge_list(shifted)
        noded = _node(a_edges, b_edges)
        if noded is None:
            continue
        rings = _stitch(a, shifted, a_edges, b_edges, *noded)
        if dx:
            if originals is None:
                originals = {v for r in a.rings for v in r} | {v for r in b.rings for v in r}
            rings = _snap_back(rings, originals, _SNAP_FACTOR * dx)
        cleaned = [r for r in map(_clean_ring, rings) if r is not None]
        return Region(tuple(cleaned))
    raise DegenerateIntersection(
        "boundaries touch without properly crossing and perturbation could not separate them"
    )


def union_all(regions) -> Region:
    """Fold `union` over an iterable of regions."""
    acc = Region(())
    for r in regions:
        acc = union(acc, r)
    return acc


def region_is_simple(region: Region) -> bool:
    """True when no two boundary edges cross or overlap.

    Edges that share an endpoint are expected to touch and are not examined
    further, so a spike that doubles back along its own edge is not caught.
    """
    edges = _edge_list(region)
    for i in range(len(edges)):
        p1, p2 = edges[i]
        for j in range(i + 1, len(edges)):
            q1, q2 = edges[j]
            kind = _classify(p1, p2, q1, q2)[0]
            if kind == _PROPER:
                return False
            if kind == _DEGEN and not (p1 in (q1, q2) or p2 in (q1, q2)):
                return False
    return True


# ---------------------------------------------------------------------------
# Conversions to and from the geometry model

def region_from_geometry(g) -> Region:
    """Region of a Polygon or MultiPolygon (winding already normalized)."""
    if isinstance(g, Polygon):
        polygons = (g,)
    elif isinstance(g, MultiPolygon):
        polygons = g.polygons
    else:
        raise TypeError(f"no region for {type(g).__name__}")
    rings = []
    for p in polygons:
        rings.append(p.exterior[:-1])
        rings.extend(r[:-1] for r in p.interiors)
    return Region(tuple(rings))


def region_to_geometry(region: Region, srs_id: str):
    """Assemble rings into polygons, each hole under its smallest enclosing shell."""
    shells = []
    holes = []
    for ring in region.rings:
        (shells if ring_area(ring) > 0.0 else holes).append(ring)
    if not shells:
        raise DegenerateIntersection("region has no shell ring to form a polygon")

    assembled = [(abs(ring_area(s)), s, []) for s in shells]
    for hole in holes:
        best = None
        for k, (shell_area, shell, _) in enumerate(assembled):
            if any(_point_in_rings(v, (shell,)) for v in hole):
                if best is None or shell_area < assembled[best][0]:
                    best = k
        if best is None:
            raise DegenerateIntersection("hole ring lies outside every shell")
        assembled[best][2].append(hole)

    polys = [
        Polygon(shell + (shell[0],), tuple(h + (h[0],) for h in hs), srs_id=srs_id)
        for _, shell, hs in assembled
    ]
    if len(polys) == 1:
        return polys[0]
    return MultiPolygon(tuple(polys), srs_id=srs_id)


def polygon_union(a: Polygon, b: Polygon) -> MultiPolygon:
    """Boolean union of two simple polygons, always as a MultiPolygon."""
    merged = region_to_geometry(union(region_from_geometry(a), region_from_geometry(b)), a.srs_id)
    if isinstance(merged, Polygon):
        return MultiPolygon((merged,), srs_id=merged.srs_id)
    return merged
