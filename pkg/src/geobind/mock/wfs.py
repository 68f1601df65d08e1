"""A one-layer feature service speaking WFS 1.1.0 KVP.

The layer is ``roads`` by default, backed by whatever feature collection the
service was constructed with.  GetFeature narrows the collection in a fixed
order — feature ids first, then attribute equality from an ogc:Filter, then a
bounding-box test, and finally maxFeatures truncation — so the same query
always returns the same members in dataset order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Dict, Optional
from urllib.parse import parse_qs, urlsplit
from xml.etree import ElementTree as ET

from ..errors import ExceptionInfo
from ..gml import BBox, FeatureCollection, compute_bbox, parse_interchange, serialize_feature_collection
from ..transport import Request, Response
from ..wps_codec import encode_exception_report

_XML_HEADERS = {"Content-Type": "text/xml"}

_CAPABILITIES_TEMPLATE = """<?xml version='1.0' encoding='utf-8'?>
<wfs:WFS_Capabilities version="1.1.0" xmlns:wfs="http://www.opengis.net/wfs" xmlns:ows="http://www.opengis.net/ows">
  <ows:ServiceIdentification>
    <ows:Title>Mock Feature Service</ows:Title>
    <ows:Abstract>Offline feature access for the sample road network.</ows:Abstract>
    <ows:ServiceType>WFS</ows:ServiceType>
    <ows:ServiceTypeVersion>1.1.0</ows:ServiceTypeVersion>
  </ows:ServiceIdentification>
  <wfs:FeatureTypeList>
    <wfs:FeatureType>
      <wfs:Name>{name}</wfs:Name>
      <wfs:Title>{title}</wfs:Title>
      <wfs:DefaultSRS>{srs}</wfs:DefaultSRS>
    </wfs:FeatureType>
  </wfs:FeatureTypeList>
</wfs:WFS_Capabilities>
"""


class _QueryFault(Exception):
    def __init__(self, code, locator, message):
        super().__init__(message)
        self.info = ExceptionInfo(code, locator, (message,))


def _local(tag) -> str:
    return tag.rsplit("}", 1)[-1] if isinstance(tag, str) else ""


def _parse_filter(filter_xml: str) -> Dict[str, str]:
    """Attribute equality constraints from an ogc:Filter document."""
    try:
        root = ET.fromstring(filter_xml)
    except (ET.ParseError, ValueError, LookupError) as err:
        raise _QueryFault("InvalidParameterValue", "filter", f"unparseable filter: {err}") from None
    constraints: Dict[str, str] = {}
    for element in root.iter():
        if _local(element.tag) != "PropertyIsEqualTo":
            continue
        name = value = None
        for child in element:
            if _local(child.tag) == "PropertyName":
                name = (child.text or "").strip().rsplit(":", 1)[-1]
            elif _local(child.tag) == "Literal":
                value = child.text or ""
        if not name:
            raise _QueryFault(
                "InvalidParameterValue", "filter", "PropertyIsEqualTo needs a PropertyName"
            )
        constraints[name] = value if value is not None else ""
    if not constraints and _local(root.tag) == "Filter" and len(root):
        raise _QueryFault(
            "InvalidParameterValue", "filter", "only PropertyIsEqualTo filters are supported"
        )
    return constraints


def _parse_bbox(raw: str) -> BBox:
    parts = raw.split(",")
    if len(parts) < 4:
        raise _QueryFault("InvalidParameterValue", "bbox", f"bbox needs four numbers, got {raw!r}")
    try:
        numbers = [float(p) for p in parts[:4]]
    except ValueError:
        raise _QueryFault("InvalidParameterValue", "bbox", f"non-numeric bbox {raw!r}") from None
    return BBox(numbers[0], numbers[1], numbers[2], numbers[3])


def _boxes_intersect(a: BBox, b: BBox) -> bool:
    return a.min_x <= b.max_x and b.min_x <= a.max_x and a.min_y <= b.max_y and b.min_y <= a.max_y


@dataclass
class WfsService:
    """Serves one named layer out of an in-memory feature collection."""

    dataset: FeatureCollection
    layer_name: str = "roads"
    layer_title: str = "Road centerlines"
    latency_ms: int = 0

    def handle(self, request: Request) -> Response:
        if self.latency_ms:
            time.sleep(self.latency_ms / 1000.0)
        try:
            if request.method != "GET":
                raise _QueryFault(
                    "OperationNotSupported", None, f"method {request.method} is not supported"
                )
            params = {
                key.lower(): values[0]
                for key, values in parse_qs(
                    urlsplit(request.url).query, keep_blank_values=True
                ).items()
            }
            operation = params.get("request", "")
            if operation == "GetCapabilities":
                return self._capabilities()
            if operation == "GetFeature":
                return self._get_feature(params)
            raise _QueryFault(
                "OperationNotSupported" if operation else "MissingParameterValue",
                "request",
                f"unsupported KVP operation {operation!r}",
            )
        except _QueryFault as fault:
            return Response(400, dict(_XML_HEADERS), encode_exception_report(fault.info))
        except Exception as err:  # noqa: BLE001 — protocol surface, never abort
            info = ExceptionInfo("NoApplicableCode", None, (f"internal error: {err}",))
            return Response(500, dict(_XML_HEADERS), encode_exception_report(info))

    def _capabilities(self) -> Response:
        body = _CAPABILITIES_TEMPLATE.format(
            name=self.layer_name, title=self.layer_title, srs=self.dataset.srs_id
        )
        return Response(200, dict(_XML_HEADERS), body.encode("utf-8"))

    def _get_feature(self, params) -> Response:
        type_name = params.get("typename")
        if not type_name:
            raise _QueryFault("MissingParameterValue", "typeName", "typeName is required")
        if type_name.rsplit(":", 1)[-1] != self.layer_name:
            raise _QueryFault(
                "InvalidParameterValue", "typeName", f"no feature type {type_name!r}"
            )

        selected = list(self.dataset.features)

        feature_ids = params.get("featureid")
        if feature_ids is not None:
            wanted = {fid for fid in feature_ids.split(",") if fid}
            selected = [f for f in selected if f.id in wanted]

        filter_xml = params.get("filter")
        if filter_xml:
            constraints = _parse_filter(filter_xml)
            selected = [
                f
                for f in selected
                if all(f.attributes.get(k) == v for k, v in constraints.items())
            ]

        bbox_raw = params.get("bbox")
        if bbox_raw:
            window = _parse_bbox(bbox_raw)
            selected = [f for f in selected if _boxes_intersect(compute_bbox(f.geometry), window)]

        max_raw = params.get("maxfeatures")
        if max_raw is not None:
            try:
                limit = int(max_raw)
            except ValueError:
                raise _QueryFault(
                    "InvalidParameterValue", "maxFeatures", f"non-integer maxFeatures {max_raw!r}"
                ) from None
            if limit < 0:
                raise _QueryFault(
                    "InvalidParameterValue", "maxFeatures", "maxFeatures cannot be negative"
                )
            selected = selected[:limit]

        collection = FeatureCollection(tuple(selected), srs_id=self.dataset.srs_id)
        body = serialize_feature_collection(collection, type_name=self.layer_name)
        return Response(200, dict(_XML_HEADERS), body)


def default_dataset() -> FeatureCollection:
    """The built-in road network: three named line features."""
    from . import fixture_bytes

    return parse_interchange(fixture_bytes("roads.geojson"))


def wfs_handle(request: Request) -> Response:
    """Handle one WFS request against the built-in dataset."""
    return _default_service().handle(request)


_SERVICE: Optional[WfsService] = None


def _default_service() -> WfsService:
    global _SERVICE
    if _SERVICE is None:
        _SERVICE = WfsService(default_dataset())
    return _SERVICE
