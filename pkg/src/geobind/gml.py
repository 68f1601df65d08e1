"""Vector geometry model and codecs.

Parses and writes the GML 3.1.1 simple-feature subset (gml:pos / gml:posList,
with the legacy gml:coordinates form accepted on read), parses WFS feature
collections, and converts to and from GeoJSON as the interchange text form
used by the CLI, the bridge and the UI.

Coordinates are planar (x, y) pairs in SRS units and are never reprojected.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import (
    MalformedCoordinates,
    MixedSrs,
    NoGeometryProperty,
    UnsupportedGeometry,
    XmlSyntax,
)

GML_NS = "http://www.opengis.net/gml"
WFS_NS = "http://www.opengis.net/wfs"
FEATURE_NS = "http://geobind.dev/features"
DEFAULT_SRS = "EPSG:4326"

ET.register_namespace("gml", GML_NS)
ET.register_namespace("wfs", WFS_NS)
ET.register_namespace("gb", FEATURE_NS)

Position = "tuple[float, float]"


def _check_positions(positions, minimum, what):
    if len(positions) < minimum:
        raise MalformedCoordinates(f"{what} needs at least {minimum} positions, got {len(positions)}")
    for x, y in positions:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedCoordinates(f"non-finite coordinate in {what}: ({x}, {y})")


def ring_signed_area(ring) -> float:
    """Shoelace signed area of a closed ring (positive when counter-clockwise).

    Computed about the first vertex so rings far from the origin do not lose
    precision to cancellation.
    """
    ox, oy = ring[0]
    total = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        total += (x1 - ox) * (y2 - oy) - (x2 - ox) * (y1 - oy)
    return total / 2.0


def _normalize_ring(ring, clockwise: bool):
    ring = tuple((float(x), float(y)) for x, y in ring)
    _check_positions(ring, 4, "ring")
    if ring[0] != ring[-1]:
        raise MalformedCoordinates("ring is not closed (first position != last)")
    area = ring_signed_area(ring)
    if area != 0.0 and (area < 0.0) != clockwise:
        ring = ring[::-1]
    return ring


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    srs_id: str = DEFAULT_SRS

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        _check_positions([(self.x, self.y)], 1, "point")


@dataclass(frozen=True)
class LineString:
    points: tuple
    srs_id: str = DEFAULT_SRS

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        _check_positions(pts, 2, "line string")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class Polygon:
    """Closed exterior ring plus optional interior rings (holes).

    Rings keep the repeated closing position.  Winding is normalized on
    construction: exterior counter-clockwise, interiors clockwise.  Rings of
    zero area (degenerate envelopes) are stored as given.
    """

    exterior: tuple
    interiors: tuple = ()
    srs_id: str = DEFAULT_SRS

    def __post_init__(self):
        object.__setattr__(self, "exterior", _normalize_ring(self.exterior, clockwise=False))
        object.__setattr__(
            self, "interiors", tuple(_normalize_ring(r, clockwise=True) for r in self.interiors)
        )

    def rings(self):
        return (self.exterior, *self.interiors)


def _member_srs(members, srs_id):
    if srs_id is None:
        srs_id = members[0].srs_id if members else DEFAULT_SRS
    for m in members:
        if m.srs_id != srs_id:
            raise MixedSrs(f"member SRS {m.srs_id!r} differs from collection SRS {srs_id!r}")
    return srs_id


@dataclass(frozen=True)
class MultiPoint:
    points: tuple
    srs_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "srs_id", _member_srs(self.points, self.srs_id))


@dataclass(frozen=True)
class MultiLineString:
    lines: tuple
    srs_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "srs_id", _member_srs(self.lines, self.srs_id))


@dataclass(frozen=True)
class MultiPolygon:
    polygons: tuple
    srs_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "polygons", tuple(self.polygons))
        object.__setattr__(self, "srs_id", _member_srs(self.polygons, self.srs_id))


Geometry = (Point, LineString, Polygon, MultiPoint, MultiLineString, MultiPolygon)


@dataclass(frozen=True)
class BBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float
    srs_id: str = DEFAULT_SRS

    def __post_init__(self):
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise MalformedCoordinates("bounding box min exceeds max")


@dataclass(frozen=True)
class Feature:
    id: str
    geometry: object
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise MalformedCoordinates("feature id must be non-empty")
        object.__setattr__(self, "attributes", dict(self.attributes))


@dataclass(frozen=True)
class FeatureCollection:
    features: tuple
    srs_id: str = DEFAULT_SRS

    def __post_init__(self):
        feats = tuple(self.features)
        for f in feats:
            if f.geometry.srs_id != self.srs_id:
                raise MixedSrs(
                    f"feature {f.id!r} uses SRS {f.geometry.srs_id!r}, collection uses {self.srs_id!r}"
                )
        object.__setattr__(self, "features", feats)


# ---------------------------------------------------------------------------
# Coordinate text

def format_coord(v: float) -> str:
    """Shortest decimal text that round-trips to the identical double."""
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _parse_doubles(text: str, what: str):
    values = []
    for token in (text or "").split():
        try:
            v = float(token)
        except ValueError:
            raise MalformedCoordinates(f"non-numeric token {token!r} in {what}") from None
        if not math.isfinite(v):
            raise MalformedCoordinates(f"non-finite value {token!r} in {what}")
        values.append(v)
    return values


def _pairs(values, what):
    if len(values) % 2 != 0:
        raise MalformedCoordinates(f"odd coordinate count ({len(values)}) in {what}")
    return tuple((values[i], values[i + 1]) for i in range(0, len(values), 2))


def _parse_pos_text(elem, what):
    """Positions from a gml:pos, gml:posList or legacy gml:coordinates element."""
    tag = _local(elem.tag)
    if tag == "coordinates":
        # legacy GML 2 form: comma within a pair, whitespace between pairs
        pairs = []
        for token in (elem.text or "").split():
            parts = token.split(",")
            if len(parts) != 2:
                raise MalformedCoordinates(f"malformed coordinate tuple {token!r} in {what}")
            pairs.append((_parse_doubles(parts[0], what)[0], _parse_doubles(parts[1], what)[0]))
        return tuple(pairs)
    return _pairs(_parse_doubles(elem.text or "", what), what)


# ---------------------------------------------------------------------------
# GML reading

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _is_gml(elem) -> bool:
    return isinstance(elem.tag, str) and elem.tag.startswith("{" + GML_NS + "}")


def _find_gml(elem, *names):
    for child in elem:
        if _is_gml(child) and _local(child.tag) in names:
            return child
    return None


def _findall_gml(elem, *names):
    return [c for c in elem if _is_gml(c) and _local(c.tag) in names]


def parse_geometry(doc) -> object:
    """Parse a GML 3.1.1 geometry document or fragment."""
    if isinstance(doc, str):
        doc = doc.encode("utf-8")
    try:
        root = ET.fromstring(doc)
    except (ET.ParseError, ValueError, LookupError) as exc:
        raise XmlSyntax(f"not well-formed XML: {exc}") from None
    return _geometry_from_element(root, DEFAULT_SRS)


def _geometry_from_element(elem, inherited_srs):
    if not _is_gml(elem):
        raise UnsupportedGeometry(f"element {elem.tag!r} is not a GML geometry")
    srs = elem.get("srsName") or inherited_srs
    kind = _local(elem.tag)
    if kind == "Point":
        pos = _find_gml(elem, "pos", "coordinates")
        if pos is None:
            raise MalformedCoordinates("gml:Point lacks a position")
        pairs = _parse_pos_text(pos, "gml:Point")
        if len(pairs) != 1:
            raise MalformedCoordinates(f"gml:Point carries {len(pairs)} positions")
        return Point(pairs[0][0], pairs[0][1], srs_id=srs)
    if kind == "LineString":
        pos = _find_gml(elem, "posList", "coordinates")
        if pos is None:
            raise MalformedCoordinates("gml:LineString lacks gml:posList")
        return LineString(_parse_pos_text(pos, "gml:LineString"), srs_id=srs)
    if kind == "Polygon":
        exterior = _find_gml(elem, "exterior")
        if exterior is None:
            raise MalformedCoordinates("gml:Polygon lacks gml:exterior")
        rings = [_ring_positions(exterior)]
        rings.extend(_ring_positions(i) for i in _findall_gml(elem, "interior"))
        return Polygon(rings[0], tuple(rings[1:]), srs_id=srs)
    if kind == "MultiPoint":
        members = _aggregate_members(elem, "pointMember", "pointMembers")
        return MultiPoint(tuple(_geometry_from_element(m, srs) for m in members), srs_id=srs)
    if kind == "MultiLineString":
        members = _aggregate_members(elem, "lineStringMember", "lineStringMembers")
        return MultiLineString(tuple(_geometry_from_element(m, srs) for m in members), srs_id=srs)
    if kind == "MultiPolygon":
        members = _aggregate_members(elem, "polygonMember", "polygonMembers")
        return MultiPolygon(tuple(_geometry_from_element(m, srs) for m in members), srs_id=srs)
    raise UnsupportedGeometry(f"unsupported GML geometry gml:{kind}")


def _ring_positions(boundary_elem):
    ring = _find_gml(boundary_elem, "LinearRing")
    if ring is None:
        raise UnsupportedGeometry("polygon boundary without gml:LinearRing")
    pos = _find_gml(ring, "posList", "coordinates")
    if pos is None:
        raise MalformedCoordinates("gml:LinearRing lacks gml:posList")
    return _parse_pos_text(pos, "gml:LinearRing")


def _aggregate_members(elem, single, plural):
    members = []
    for wrapper in _findall_gml(elem, single, plural):
        members.extend(c for c in wrapper if isinstance(c.tag, str))
    if not members:
        raise MalformedCoordinates(f"empty gml:{_local(elem.tag)} aggregate")
    return members


# ---------------------------------------------------------------------------
# GML writing

def _pos_list_text(positions) -> str:
    return " ".join(f"{format_coord(x)} {format_coord(y)}" for x, y in positions)


def _geometry_to_element(g, with_srs=True) -> ET.Element:
    def el(name, parent=None):
        e = ET.Element(f"{{{GML_NS}}}{name}") if parent is None else ET.SubElement(parent, f"{{{GML_NS}}}{name}")
        return e

    if isinstance(g, Point):
        root = el("Point")
        el("pos", root).text = f"{format_coord(g.x)} {format_coord(g.y)}"
    elif isinstance(g, LineString):
        root = el("LineString")
        el("posList", root).text = _pos_list_text(g.points)
    elif isinstance(g, Polygon):
        root = el("Polygon")
        boundary = el("exterior", root)
        el("posList", el("LinearRing", boundary)).text = _pos_list_text(g.exterior)
        for hole in g.interiors:
            boundary = el("interior", root)
            el("posList", el("LinearRing", boundary)).text = _pos_list_text(hole)
    elif isinstance(g, MultiPoint):
        root = el("MultiPoint")
        for m in g.points:
            el("pointMember", root).append(_geometry_to_element(m, with_srs=False))
    elif isinstance(g, MultiLineString):
        root = el("MultiLineString")
        for m in g.lines:
            el("lineStringMember", root).append(_geometry_to_element(m, with_srs=False))
    elif isinstance(g, MultiPolygon):
        root = el("MultiPolygon")
        for m in g.polygons:
            el("polygonMember", root).append(_geometry_to_element(m, with_srs=False))
    else:
        raise UnsupportedGeometry(f"cannot serialize {type(g).__name__}")
    if with_srs:
        root.set("srsName", g.srs_id)
    return root


def serialize_geometry(g) -> bytes:
    """GML 3.1.1 fragment (no XML declaration, so it can be embedded verbatim)."""
    return ET.tostring(_geometry_to_element(g), encoding="unicode").encode("utf-8")


# ---------------------------------------------------------------------------
# Feature collections

_GEOMETRY_LOCALS = frozenset(
    ["Point", "LineString", "Polygon", "MultiPoint", "MultiLineString", "MultiPolygon"]
)


def parse_feature_collection(doc) -> FeatureCollection:
    """Parse a wfs:FeatureCollection with gml:featureMember(s) children."""
    if isinstance(doc, str):
        doc = doc.encode("utf-8")
    try:
        root = ET.fromstring(doc)
    except (ET.ParseError, ValueError, LookupError) as exc:
        raise XmlSyntax(f"not well-formed XML: {exc}") from None
    if _local(root.tag) != "FeatureCollection":
        raise UnsupportedGeometry(f"root element {root.tag!r} is not a feature collection")

    members = []
    for child in root:
        if _is_gml(child) and _local(child.tag) in ("featureMember", "featureMembers"):
            members.extend(c for c in child if isinstance(c.tag, str))

    features = []
    srs = None
    for index, member in enumerate(members):
        feature, srs = _parse_feature(member, index, srs)
        features.append(feature)
    return FeatureCollection(tuple(features), srs_id=srs or DEFAULT_SRS)


def _parse_feature(member, index, srs):
    fid = member.get(f"{{{GML_NS}}}id") or member.get("fid") or member.get("id") or f"feature.{index}"
    geometry = None
    attributes = {}
    for prop in member:
        if _is_gml(prop) and _local(prop.tag) == "boundedBy":
            continue
        geom_child = next((c for c in prop if _is_gml(c) and _local(c.tag) in _GEOMETRY_LOCALS), None)
        if geom_child is not None:
            if geometry is None:
                geometry = _geometry_from_element(geom_child, srs or DEFAULT_SRS)
            continue
        if len(prop) == 0:
            attributes[_local(prop.tag)] = prop.text or ""
    if geometry is None:
        raise NoGeometryProperty(f"feature {fid!r} has no geometry-valued property")
    if srs is not None and geometry.srs_id != srs:
        raise MixedSrs(f"feature {fid!r} uses SRS {geometry.srs_id!r}, previous members use {srs!r}")
    return Feature(fid, geometry, attributes), geometry.srs_id


def serialize_feature_collection(fc: FeatureCollection, type_name: str = "feature") -> bytes:
    """WFS 1.1.0-style GML feature collection document (with XML declaration)."""
    root = ET.Element(f"{{{WFS_NS}}}FeatureCollection")
    for f in fc.features:
        member = ET.SubElement(root, f"{{{GML_NS}}}featureMember")
        feat = ET.SubElement(member, f"{{{FEATURE_NS}}}{type_name}")
        feat.set(f"{{{GML_NS}}}id", f.id)
        geom_prop = ET.SubElement(feat, f"{{{FEATURE_NS}}}geom")
        geom_prop.append(_geometry_to_element(f.geometry))
        for name, value in f.attributes.items():
            ET.SubElement(feat, f"{{{FEATURE_NS}}}{name}").text = value
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def extract_geometries(fc: FeatureCollection) -> list:
    """Geometries in feature order, attributes discarded."""
    return [f.geometry for f in fc.features]


def compute_bbox(g) -> BBox:
    """Tight axis-aligned bounds over all positions of a geometry."""
    xs, ys = [], []

    def visit(geom):
        if isinstance(geom, Point):
            xs.append(geom.x)
            ys.append(geom.y)
        elif isinstance(geom, LineString):
            for x, y in geom.points:
                xs.append(x)
                ys.append(y)
        elif isinstance(geom, Polygon):
            for ring in geom.rings():
                for x, y in ring:
                    xs.append(x)
                    ys.append(y)
        elif isinstance(geom, MultiPoint):
            for m in geom.points:
                visit(m)
        elif isinstance(geom, MultiLineString):
            for m in geom.lines:
                visit(m)
        elif isinstance(geom, MultiPolygon):
            for m in geom.polygons:
                visit(m)
        else:
            raise UnsupportedGeometry(f"cannot bound {type(geom).__name__}")

    visit(g)
    return BBox(min(xs), min(ys), max(xs), max(ys), srs_id=g.srs_id)


# ---------------------------------------------------------------------------
# GeoJSON interchange

def _num(v: float):
    f = float(v)
    return int(f) if f.is_integer() and abs(f) < 2**53 else f


def _coords(positions):
    return [[_num(x), _num(y)] for x, y in positions]


def geometry_to_geojson(g) -> dict:
    if isinstance(g, Point):
        return {"type": "Point", "coordinates": [_num(g.x), _num(g.y)]}
    if isinstance(g, LineString):
        return {"type": "LineString", "coordinates": _coords(g.points)}
    if isinstance(g, Polygon):
        return {"type": "Polygon", "coordinates": [_coords(r) for r in g.rings()]}
    if isinstance(g, MultiPoint):
        return {"type": "MultiPoint", "coordinates": [[_num(p.x), _num(p.y)] for p in g.points]}
    if isinstance(g, MultiLineString):
        return {"type": "MultiLineString", "coordinates": [_coords(l.points) for l in g.lines]}
    if isinstance(g, MultiPolygon):
        return {
            "type": "MultiPolygon",
            "coordinates": [[_coords(r) for r in p.rings()] for p in g.polygons],
        }
    raise UnsupportedGeometry(f"cannot convert {type(g).__name__}")


def collection_to_geojson(fc: FeatureCollection) -> dict:
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": f.id,
                "geometry": geometry_to_geojson(f.geometry),
                "properties": dict(f.attributes),
            }
            for f in fc.features
        ],
    }


def to_interchange(fc: FeatureCollection) -> str:
    """Compact GeoJSON text for export and UI display."""
    return json.dumps(collection_to_geojson(fc), separators=(",", ":"))


def geojson_to_geometry(obj: dict, srs_id: str = DEFAULT_SRS):
    kind = obj.get("type")
    coords = obj.get("coordinates")

    def pos(c):
        if not isinstance(c, (list, tuple)) or len(c) < 2:
            raise MalformedCoordinates(f"malformed GeoJSON position {c!r}")
        return (float(c[0]), float(c[1]))

    if kind == "Point":
        x, y = pos(coords)
        return Point(x, y, srs_id=srs_id)
    if kind == "LineString":
        return LineString(tuple(pos(c) for c in coords), srs_id=srs_id)
    if kind == "Polygon":
        rings = [tuple(pos(c) for c in ring) for ring in coords]
        if not rings:
            raise MalformedCoordinates("GeoJSON polygon without rings")
        return Polygon(rings[0], tuple(rings[1:]), srs_id=srs_id)
    if kind == "MultiPoint":
        return MultiPoint(tuple(Point(*pos(c), srs_id=srs_id) for c in coords), srs_id=srs_id)
    if kind == "MultiLineString":
        return MultiLineString(
            tuple(LineString(tuple(pos(c) for c in line), srs_id=srs_id) for line in coords),
            srs_id=srs_id,
        )
    if kind == "MultiPolygon":
        polys = []
        for rings in coords:
            rs = [tuple(pos(c) for c in ring) for ring in rings]
            polys.append(Polygon(rs[0], tuple(rs[1:]), srs_id=srs_id))
        return MultiPolygon(tuple(polys), srs_id=srs_id)
    raise UnsupportedGeometry(f"unsupported GeoJSON geometry type {kind!r}")


def _attr_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_coord(value)
    return str(value)


def parse_interchange(text, srs_id: str = DEFAULT_SRS) -> FeatureCollection:
    """GeoJSON ingestion: accepts a FeatureCollection, a Feature or a bare geometry."""
    obj = json.loads(text) if isinstance(text, (str, bytes)) else text
    if not isinstance(obj, dict):
        raise MalformedCoordinates("GeoJSON payload is not an object")
    kind = obj.get("type")
    if kind == "FeatureCollection":
        features = []
        for i, f in enumerate(obj.get("features", [])):
            features.append(_feature_from_geojson(f, i, srs_id))
        return FeatureCollection(tuple(features), srs_id=srs_id)
    if kind == "Feature":
        return FeatureCollection((_feature_from_geojson(obj, 0, srs_id),), srs_id=srs_id)
    return FeatureCollection(
        (Feature("feature.0", geojson_to_geometry(obj, srs_id)),), srs_id=srs_id
    )


def _feature_from_geojson(obj, index, srs_id):
    if obj.get("geometry") is None:
        raise NoGeometryProperty(f"GeoJSON feature {obj.get('id', index)!r} has no geometry")
    fid = obj.get("id")
    fid = f"feature.{index}" if fid is None else str(fid)
    attrs = {str(k): _attr_text(v) for k, v in (obj.get("properties") or {}).items()}
    return Feature(fid, geojson_to_geometry(obj["geometry"], srs_id), attrs)
