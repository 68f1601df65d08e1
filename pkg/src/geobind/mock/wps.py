"""The published analysis service: Buffer, Centroid, Envelope over HTTP.

Capabilities and process descriptions are served from fixture files so the
bytes never vary between requests or between KVP and XML POST access.
Execute is parsed, references are dereferenced (loopback only), the kernel
runs, and the outcome goes back as an ExecuteResponse — or as the bare
payload when raw output was requested.  Every failure is an OWS exception
report; this server never answers with a bare 500 and an empty body.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple
from urllib.parse import parse_qs, urlsplit, urlparse
from xml.etree import ElementTree as ET

from .. import kernel
from ..errors import (
    DegenerateIntersection,
    ExceptionInfo,
    GeobindError,
    LiteralParseError,
    NonPositiveDistance,
    NotAnExecuteRequest,
    SelfIntersectingInput,
    XmlSyntax,
    ZeroMeasure,
)
from ..gml import (
    BBox,
    extract_geometries,
    format_coord,
    parse_feature_collection,
    parse_geometry,
    serialize_geometry,
)
from ..model import (
    ExecuteRequest,
    InlineBBox,
    InlineComplex,
    InlineLiteral,
    Reference,
    parse_literal,
)
from ..transport import HttpTransport, Request, Response, Transport
from ..wps_codec import (
    OWS_NS,
    WPS_NS,
    XLINK_NS,
    element_payload,
    encode_exception_report,
)

_XML_HEADERS = {"Content-Type": "text/xml"}

DESCRIBE_FIXTURES = {
    "Buffer": "wps_describe_buffer.xml",
    "Centroid": "wps_describe_centroid.xml",
    "Envelope": "wps_describe_envelope.xml",
}

_LOOPBACK_HOSTS = {"localhost", "127.0.0.1", "::1"}


def _local(tag) -> str:
    if isinstance(tag, str):
        return tag.rsplit("}", 1)[-1]
    return ""


def _find(element, name):
    for child in element:
        if _local(child.tag) == name:
            return child
    return None


def _findall(element, name):
    return [child for child in element if _local(child.tag) == name]


def _text(element, name, default=""):
    child = _find(element, name)
    if child is None:
        return default
    return (child.text or "").strip()


# --- Execute request parsing (also the round-trip oracle in tests) -----------


def parse_execute_request(body: bytes) -> ExecuteRequest:
    """Decode a wps:Execute POST body back into the request value."""
    try:
        root = ET.fromstring(body)
    except (ET.ParseError, ValueError, LookupError) as err:
        raise XmlSyntax(f"Execute body is not well-formed XML: {err}") from None
    if _local(root.tag) != "Execute":
        raise NotAnExecuteRequest(f"root element is {_local(root.tag)!r}")

    process = _text(root, "Identifier")
    inputs = []
    data_inputs = _find(root, "DataInputs")
    if data_inputs is not None:
        for input_el in _findall(data_inputs, "Input"):
            input_id = _text(input_el, "Identifier")
            inputs.append((input_id, _parse_input_envelope(input_el, input_id)))

    raw = False
    outputs: Tuple[str, ...] = ()
    response_form = _find(root, "ResponseForm")
    if response_form is not None:
        raw_el = _find(response_form, "RawDataOutput")
        if raw_el is not None:
            raw = True
            outputs = (_text(raw_el, "Identifier"),)
        else:
            document_el = _find(response_form, "ResponseDocument")
            if document_el is not None:
                outputs = tuple(
                    _text(o, "Identifier") for o in _findall(document_el, "Output")
                )
    return ExecuteRequest(process=process, inputs=tuple(inputs), outputs=outputs, raw=raw)


def _parse_input_envelope(input_el, input_id):
    reference = _find(input_el, "Reference")
    if reference is not None:
        href = reference.get(f"{{{XLINK_NS}}}href") or reference.get("href") or ""
        method = reference.get("method", "GET")
        body = None
        body_el = _find(reference, "Body")
        if body_el is not None:
            body = element_payload(body_el)
        return Reference(
            href=href, method=method, body=body, mime_type=reference.get("mimeType")
        )
    data = _find(input_el, "Data")
    if data is None:
        raise NotAnExecuteRequest(f"input {input_id!r} carries neither Data nor Reference")
    literal = _find(data, "LiteralData")
    if literal is not None:
        datatype = (literal.get("dataType") or "string").rsplit(":", 1)[-1]
        return InlineLiteral(value=literal.text or "", datatype=datatype)
    complex_el = _find(data, "ComplexData")
    if complex_el is not None:
        payload = element_payload(complex_el)
        encoding = complex_el.get("encoding")
        if encoding == "base64":
            import base64
            import binascii

            try:
                # whitespace-tolerant (wrapped base64 is common), otherwise strict
                payload = base64.b64decode(payload.translate(None, b" \t\r\n"), validate=True)
            except (binascii.Error, ValueError) as err:
                raise NotAnExecuteRequest(
                    f"input {input_id!r} carries undecodable base64 data: {err}"
                ) from None
        return InlineComplex(
            payload=payload,
            mime_type=complex_el.get("mimeType") or "text/xml",
            encoding=encoding,
        )
    bbox_el = _find(data, "BoundingBoxData")
    if bbox_el is not None:
        lower_el = _find(bbox_el, "LowerCorner")
        upper_el = _find(bbox_el, "UpperCorner")
        lower = ((lower_el.text or "") if lower_el is not None else "").split()
        upper = ((upper_el.text or "") if upper_el is not None else "").split()
        try:
            return InlineBBox(
                BBox(
                    float(lower[0]),
                    float(lower[1]),
                    float(upper[0]),
                    float(upper[1]),
                    srs_id=bbox_el.get("crs") or "EPSG:4326",
                )
            )
        except (ValueError, IndexError) as err:
            raise NotAnExecuteRequest(
                f"input {input_id!r} carries an unreadable bounding box: {err}"
            ) from None
    raise NotAnExecuteRequest(f"input {input_id!r} carries no recognized data element")


# --- process implementations ---------------------------------------------------


class _RequestFault(Exception):
    """Internal: an execute failure with its OWS code and locator attached."""

    def __init__(self, code, locator, message, status=400):
        super().__init__(message)
        self.info = ExceptionInfo(code, locator, (message,))
        self.status = status


def _geometry_from_payload(payload: bytes, input_id: str):
    try:
        return parse_geometry(payload)
    except GeobindError:
        pass
    try:
        collection = parse_feature_collection(payload)
        geometries = extract_geometries(collection)
    except GeobindError as err:
        raise _RequestFault(
            "InvalidParameterValue", input_id, f"payload is neither a geometry nor a feature collection: {err}"
        ) from None
    if len(geometries) != 1:
        raise _RequestFault(
            "InvalidParameterValue",
            input_id,
            f"expected exactly one feature, got {len(geometries)}",
        )
    return geometries[0]


def _run_buffer(values):
    try:
        result = kernel.buffer(values["geometry"], values["distance"])
    except NonPositiveDistance as err:
        raise _RequestFault("InvalidParameterValue", "distance", str(err)) from None
    except SelfIntersectingInput as err:
        raise _RequestFault("InvalidParameterValue", "geometry", str(err)) from None
    except DegenerateIntersection as err:
        raise _RequestFault("NoApplicableCode", None, str(err), status=500) from None
    return {"result": ("complex", result)}


def _run_centroid(values):
    try:
        point = kernel.centroid(values["geometry"])
    except ZeroMeasure as err:
        raise _RequestFault("InvalidParameterValue", "geometry", str(err)) from None
    return {"result": ("literal", f"{format_coord(point.x)} {format_coord(point.y)}")}


def _run_envelope(values):
    return {"result": ("complex", kernel.envelope(values["geometry"]))}


@dataclass(frozen=True)
class _ProcessSpec:
    inputs: Tuple[Tuple[str, str], ...]  # (identifier, "geometry" | "double")
    outputs: Tuple[str, ...]
    run: Callable[[dict], dict]


_PROCESSES: Dict[str, _ProcessSpec] = {
    "Buffer": _ProcessSpec((("geometry", "geometry"), ("distance", "double")), ("result",), _run_buffer),
    "Centroid": _ProcessSpec((("geometry", "geometry"),), ("result",), _run_centroid),
    "Envelope": _ProcessSpec((("geometry", "geometry"),), ("result",), _run_envelope),
}


# --- the service ----------------------------------------------------------------


@dataclass
class WpsService:
    """Request handler; all state is configuration, never per-request."""

    reference_transport: Transport = field(default_factory=HttpTransport)
    allow_nonlocal_refs: bool = False
    latency_ms: int = 0

    def handle(self, request: Request) -> Response:
        if self.latency_ms:
            time.sleep(self.latency_ms / 1000.0)
        try:
            if request.method == "GET":
                return self._handle_kvp(request)
            if request.method == "POST":
                return self._handle_post(request)
            return _fault_response(
                _RequestFault("OperationNotSupported", None, f"method {request.method}")
            )
        except _RequestFault as fault:
            return _fault_response(fault)
        except Exception as err:  # noqa: BLE001 — protocol surface, never abort
            return _fault_response(
                _RequestFault("NoApplicableCode", None, f"internal error: {err}", status=500)
            )

    # KVP GET

    def _handle_kvp(self, request: Request) -> Response:
        params = {
            key.lower(): values[0]
            for key, values in parse_qs(
                urlsplit(request.url).query, keep_blank_values=True
            ).items()
        }
        operation = params.get("request", "")
        if operation == "GetCapabilities":
            return Response(200, dict(_XML_HEADERS), _fixture("wps_capabilities.xml"))
        if operation == "DescribeProcess":
            return self._describe(params.get("identifier"))
        raise _RequestFault(
            "OperationNotSupported" if operation else "MissingParameterValue",
            "request",
            f"unsupported KVP operation {operation!r}",
        )

    def _describe(self, identifier: Optional[str]) -> Response:
        if not identifier:
            raise _RequestFault("MissingParameterValue", "identifier", "identifier is required")
        fixture = DESCRIBE_FIXTURES.get(identifier)
        if fixture is None:
            raise _RequestFault(
                "InvalidParameterValue", "identifier", f"no process {identifier!r}"
            )
        return Response(200, dict(_XML_HEADERS), _fixture(fixture))

    # XML POST

    def _handle_post(self, request: Request) -> Response:
        try:
            root = ET.fromstring(request.body or b"")
        except (ET.ParseError, ValueError, LookupError) as err:
            raise _RequestFault("NoApplicableCode", None, f"unparseable body: {err}") from None
        kind = _local(root.tag)
        if kind == "GetCapabilities":
            return Response(200, dict(_XML_HEADERS), _fixture("wps_capabilities.xml"))
        if kind == "DescribeProcess":
            return self._describe(_text(root, "Identifier", default=None))
        if kind == "Execute":
            return self._execute(request.body)
        raise _RequestFault("OperationNotSupported", None, f"unsupported request {kind!r}")

    def _execute(self, body: bytes) -> Response:
        try:
            request = parse_execute_request(body)
        except (XmlSyntax, NotAnExecuteRequest) as err:
            raise _RequestFault("InvalidParameterValue", None, str(err)) from None
        except (LiteralParseError, GeobindError) as err:
            raise _RequestFault("InvalidParameterValue", None, str(err)) from None

        spec = _PROCESSES.get(request.process)
        if spec is None:
            raise _RequestFault(
                "InvalidParameterValue", "identifier", f"no process {request.process!r}"
            )

        declared = {input_id for input_id, _ in spec.inputs}
        collected: Dict[str, list] = {}
        for input_id, envelope in request.inputs:
            if input_id not in declared:
                raise _RequestFault(
                    "InvalidParameterValue", input_id, f"process declares no input {input_id!r}"
                )
            collected.setdefault(input_id, []).append(self._resolve(envelope, input_id))

        values = {}
        for input_id, shape in spec.inputs:
            envelopes = collected.get(input_id, [])
            if not envelopes:
                raise _RequestFault(
                    "MissingParameterValue", input_id, f"input {input_id!r} is required"
                )
            if len(envelopes) > 1:
                raise _RequestFault(
                    "InvalidParameterValue", input_id, f"input {input_id!r} accepts one value"
                )
            values[input_id] = _convert(envelopes[0], shape, input_id)

        requested = request.outputs or spec.outputs
        for output_id in requested:
            if output_id not in spec.outputs:
                raise _RequestFault(
                    "InvalidParameterValue", output_id, f"no output {output_id!r}"
                )

        produced = spec.run(values)

        if request.raw:
            flavor, value = produced[requested[0]]
            if flavor == "complex":
                return Response(200, dict(_XML_HEADERS), serialize_geometry(value))
            return Response(200, {"Content-Type": "text/plain"}, str(value).encode("utf-8"))
        return Response(
            200, dict(_XML_HEADERS), _execute_response_bytes(request.process, requested, produced)
        )

    def _resolve(self, envelope, input_id):
        if not isinstance(envelope, Reference):
            return envelope
        host = urlparse(envelope.href).hostname or ""
        if host not in _LOOPBACK_HOSTS and not self.allow_nonlocal_refs:
            raise _RequestFault(
                "InvalidParameterValue",
                input_id,
                f"reference host {host!r} is not a loopback address",
            )
        try:
            response = self.reference_transport(
                Request(
                    method=envelope.method,
                    url=envelope.href,
                    headers={"Content-Type": envelope.mime_type} if envelope.body else {},
                    body=envelope.body,
                )
            )
        except GeobindError as err:
            raise _RequestFault("InvalidParameterValue", input_id, f"reference fetch failed: {err}") from None
        if not response.ok:
            raise _RequestFault(
                "InvalidParameterValue",
                input_id,
                f"reference fetch returned status {response.status}",
            )
        return InlineComplex(
            payload=response.body,
            mime_type=response.content_type or envelope.mime_type or "text/xml",
        )


def _convert(envelope, shape, input_id):
    if shape == "geometry":
        if not isinstance(envelope, InlineComplex):
            raise _RequestFault(
                "InvalidParameterValue", input_id, "a geometry input needs complex data"
            )
        return _geometry_from_payload(envelope.payload, input_id)
    if shape == "double":
        if not isinstance(envelope, InlineLiteral):
            raise _RequestFault(
                "InvalidParameterValue", input_id, "a numeric input needs literal data"
            )
        try:
            return parse_literal(envelope.value, "double")
        except LiteralParseError as err:
            raise _RequestFault("InvalidParameterValue", input_id, str(err)) from None
    raise _RequestFault("NoApplicableCode", input_id, f"unhandled input shape {shape!r}", status=500)


def _execute_response_bytes(process: str, requested, produced) -> bytes:
    root = ET.Element(
        f"{{{WPS_NS}}}ExecuteResponse", {"service": "WPS", "version": "1.0.0"}
    )
    process_el = ET.SubElement(root, f"{{{WPS_NS}}}Process")
    ET.SubElement(process_el, f"{{{OWS_NS}}}Identifier").text = process
    status_el = ET.SubElement(root, f"{{{WPS_NS}}}Status")
    ET.SubElement(status_el, f"{{{WPS_NS}}}ProcessSucceeded").text = "Process succeeded"

    splices = []
    outputs_el = ET.SubElement(root, f"{{{WPS_NS}}}ProcessOutputs")
    for output_id in requested:
        flavor, value = produced[output_id]
        output_el = ET.SubElement(outputs_el, f"{{{WPS_NS}}}Output")
        ET.SubElement(output_el, f"{{{OWS_NS}}}Identifier").text = output_id
        data_el = ET.SubElement(output_el, f"{{{WPS_NS}}}Data")
        if flavor == "complex":
            complex_el = ET.SubElement(
                data_el, f"{{{WPS_NS}}}ComplexData", {"mimeType": "text/xml"}
            )
            marker = f"__geobind_splice_{len(splices)}__"
            splices.append((marker, serialize_geometry(value)))
            complex_el.text = marker
        else:
            literal_el = ET.SubElement(data_el, f"{{{WPS_NS}}}LiteralData")
            literal_el.text = str(value)

    body = ET.tostring(root, encoding="utf-8", xml_declaration=True)
    for marker, payload in splices:
        body = body.replace(marker.encode("ascii"), payload)
    return body


def _fault_response(fault: _RequestFault) -> Response:
    return Response(fault.status, dict(_XML_HEADERS), encode_exception_report(fault.info))


def _fixture(name: str) -> bytes:
    from . import fixture_bytes

    return fixture_bytes(name)


_DEFAULT_SERVICE = WpsService()


def wps_handle(request: Request) -> Response:
    """Handle one WPS request with default configuration."""
    return _DEFAULT_SERVICE.handle(request)
