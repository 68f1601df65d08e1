"""WFS 1.1.0 client: layer discovery, GetFeature composition, and the two
ways of feeding features to a process.

A query can travel as a reference (the WPS dereferences the URL itself) or be
resolved client-side into an inline envelope — the same query, two delivery
modes, equivalent results.  Queries carry at most one filter family: feature
ids, attribute equality, or a bounding box.  WFS forbids mixing featureId
with filter expressions, so the families are exclusive rather than combined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple
from urllib.parse import quote
from xml.etree import ElementTree as ET

from .errors import (
    AmbiguousGeometry,
    ConflictingFilters,
    NotAWfsCapabilities,
    ServiceReportedException,
    TransportError,
)
from .gml import BBox, FeatureCollection, format_coord, parse_feature_collection, serialize_feature_collection, serialize_geometry
from .model import InlineComplex, Reference, _require_absolute_http_url
from .transport import Request, Transport
from .wps_codec import decode_exception_report, classify_document

OGC_NS = "http://www.opengis.net/ogc"
ET.register_namespace("ogc", OGC_NS)


@dataclass(frozen=True)
class WfsQuery:
    service_url: str
    type_name: str
    max_features: Optional[int] = None
    feature_ids: Tuple[str, ...] = ()
    attribute_filters: Tuple[Tuple[str, str], ...] = ()
    bbox: Optional[BBox] = None

    def __post_init__(self):
        _require_absolute_http_url(self.service_url)
        if not self.type_name:
            raise ValueError("type_name must be non-empty")
        if self.max_features is not None and self.max_features <= 0:
            raise ValueError(f"max_features must be positive, got {self.max_features}")
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        if any(not fid for fid in self.feature_ids):
            raise ValueError("feature ids must be non-empty")
        object.__setattr__(
            self, "attribute_filters", tuple((str(k), str(v)) for k, v in self.attribute_filters)
        )


@dataclass(frozen=True)
class LayerInfo:
    name: str
    title: str = ""
    default_srs: str = ""

    def __post_init__(self):
        if not self.name:
            raise ValueError("layer name must be non-empty")


def _local(tag) -> str:
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def list_layers(capabilities_doc: bytes) -> list:
    """One LayerInfo per advertised FeatureType, in document order."""
    document = classify_document(capabilities_doc, "text/xml")
    root = ET.fromstring(capabilities_doc)
    if document.kind == "ExceptionReport":
        raise ServiceReportedException(decode_exception_report(capabilities_doc))
    if _local(root.tag) != "WFS_Capabilities":
        raise NotAWfsCapabilities(f"root element is {_local(root.tag)!r}")
    layers = []
    for type_list in root:
        if _local(type_list.tag) != "FeatureTypeList":
            continue
        for feature_type in type_list:
            if _local(feature_type.tag) != "FeatureType":
                continue
            name = title = srs = ""
            for child in feature_type:
                if _local(child.tag) == "Name":
                    name = (child.text or "").strip()
                elif _local(child.tag) == "Title":
                    title = (child.text or "").strip()
                elif _local(child.tag) == "DefaultSRS":
                    srs = (child.text or "").strip()
            if name:
                layers.append(LayerInfo(name=name, title=title, default_srs=srs))
    return layers


def _filter_xml(attribute_filters) -> str:
    root = ET.Element(f"{{{OGC_NS}}}Filter")
    for name, value in attribute_filters:
        clause = ET.SubElement(root, f"{{{OGC_NS}}}PropertyIsEqualTo")
        ET.SubElement(clause, f"{{{OGC_NS}}}PropertyName").text = name
        ET.SubElement(clause, f"{{{OGC_NS}}}Literal").text = value
    return ET.tostring(root, encoding="unicode")


def build_get_feature_url(q: WfsQuery) -> str:
    """Deterministic KVP GetFeature URL for the query."""
    families = sum(
        1 for present in (q.feature_ids, q.attribute_filters, q.bbox) if present
    )
    if families > 1:
        raise ConflictingFilters(
            "a query uses at most one of feature ids, attribute filters, or a bbox"
        )
    params = [
        ("service", "WFS"),
        ("version", "1.1.0"),
        ("request", "GetFeature"),
        ("typeName", quote(q.type_name, safe="")),
    ]
    if q.max_features is not None:
        params.append(("maxFeatures", str(q.max_features)))
    if q.feature_ids:
        params.append(("featureId", quote(",".join(q.feature_ids), safe=",")))
    if q.attribute_filters:
        params.append(("filter", quote(_filter_xml(q.attribute_filters), safe="")))
    if q.bbox is not None:
        corners = (q.bbox.min_x, q.bbox.min_y, q.bbox.max_x, q.bbox.max_y)
        params.append(("bbox", ",".join(format_coord(c) for c in corners)))
    tail = "&".join(f"{k}={v}" for k, v in params)
    separator = "&" if "?" in q.service_url else "?"
    return f"{q.service_url}{separator}{tail}"


def fetch_collection(url: str, transport: Transport) -> FeatureCollection:
    """GET a composed GetFeature URL and parse the returned collection.

    An ows:ExceptionReport body wins over the HTTP status — it names the
    actual problem — so it surfaces as ServiceReportedException even on 4xx.
    """
    response = transport(Request("GET", url))
    document = classify_document(response.body, response.content_type or "")
    if document.kind == "ExceptionReport":
        raise ServiceReportedException(decode_exception_report(response.body))
    if not response.ok:
        raise TransportError(
            f"GetFeature returned status {response.status}", status=response.status
        )
    return parse_feature_collection(response.body)


def fetch_features(q: WfsQuery, transport: Transport) -> FeatureCollection:
    """Run the query and parse the returned collection."""
    return fetch_collection(build_get_feature_url(q), transport)


def as_reference(q: WfsQuery) -> Reference:
    """Package the query so the process server fetches the features itself."""
    return Reference(href=build_get_feature_url(q), method="GET", mime_type="text/xml")


def _inline_envelope(collection: FeatureCollection, geometry_only: bool, type_name: str) -> InlineComplex:
    if geometry_only:
        if len(collection.features) != 1:
            raise AmbiguousGeometry(
                f"query returned {len(collection.features)} features, need exactly 1; "
                "narrow it with a featureId filter"
            )
        payload = serialize_geometry(collection.features[0].geometry)
    else:
        payload = serialize_feature_collection(collection, type_name=type_name)
    return InlineComplex(payload=payload, mime_type="text/xml")


def resolve_reference(q: WfsQuery, transport: Transport, geometry_only: bool = False) -> InlineComplex:
    """Fetch client-side and inline the result.

    With geometry_only the collection must hold exactly one feature, whose
    bare geometry becomes the payload; taking "the first" of several would
    silently hide a bad filter.
    """
    return _inline_envelope(fetch_features(q, transport), geometry_only, q.type_name)


def resolve_href(href: str, transport: Transport, geometry_only: bool = True) -> InlineComplex:
    """Like resolve_reference, for an already-composed GetFeature URL."""
    return _inline_envelope(fetch_collection(href, transport), geometry_only, "feature")
