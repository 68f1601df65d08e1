"""WPS 1.0.0 wire formats.

Discovery and description travel as KVP GET URLs; Execute travels as an XML
POST body.  Writers are strict — every element namespace-qualified, UTF-8,
XML declaration always present — while readers match on local names so that
documents from servers with laxer namespace habits still decode ("lenient
read, strict write").

Complex payloads pass through this layer as opaque bytes.  Inline payloads
are spliced into the Execute document verbatim (or base64-armored when the
envelope says so), never re-serialized, so what the server receives is
bit-for-bit what was bound — except that a leading XML declaration, which
cannot legally sit inside a document, is dropped from spliced payloads.
"""

from __future__ import annotations

import base64
import binascii
import re
from dataclasses import dataclass
from typing import Optional, Tuple
from urllib.parse import quote
from xml.etree import ElementTree as ET

from .errors import (
    EmptyIdentifier,
    ExceptionInfo,
    LiteralParseError,
    MalformedCoordinates,
    NotACapabilitiesDocument,
    NotADescriptionDocument,
    NotAnExceptionReport,
    ServiceReportedException,
    UnknownParameterKind,
    UnsupportedVersion,
    XmlSyntax,
)
from .gml import BBox, format_coord
from .model import (
    WPS_VERSION,
    DataEnvelope,
    ExecuteRequest,
    ExecuteResult,
    Format,
    InlineBBox,
    InlineComplex,
    InlineLiteral,
    InputDescriptor,
    Kind,
    OutputDescriptor,
    ProcessBrief,
    ProcessDescription,
    Reference,
    ServiceEndpoint,
)

WPS_NS = "http://www.opengis.net/wps/1.0.0"
OWS_NS = "http://www.opengis.net/ows/1.1"
XLINK_NS = "http://www.w3.org/1999/xlink"

ET.register_namespace("wps", WPS_NS)
ET.register_namespace("ows", OWS_NS)
ET.register_namespace("xlink", XLINK_NS)

# base_url placeholder in decoded metadata; a binding session substitutes the
# URL it actually contacted
_UNKNOWN_BASE = "http://localhost/"

_XML_MIME = re.compile(r"xml", re.IGNORECASE)


@dataclass(frozen=True)
class WpsDocument:
    kind: str  # Capabilities | ProcessDescriptions | ExecuteResponse | ExceptionReport | RawOutput
    body: bytes
    mime_type: str


def _local(tag) -> str:
    if isinstance(tag, str):
        return tag.rsplit("}", 1)[-1]
    return ""  # comments / processing instructions


def _find(element, name):
    for child in element:
        if _local(child.tag) == name:
            return child
    return None


def _findall(element, name):
    return [child for child in element if _local(child.tag) == name]


def _text(element, name, default=None):
    child = _find(element, name)
    if child is None:
        return default
    return (child.text or "").strip()


def _parse(doc: bytes) -> ET.Element:
    # LookupError: a declaration naming an unknown encoding; ValueError: an
    # encoding declaration on an already-decoded string — both count as syntax
    try:
        return ET.fromstring(doc)
    except (ET.ParseError, ValueError, LookupError) as err:
        raise XmlSyntax(f"not well-formed XML: {err}") from None


# --- KVP encoders -------------------------------------------------------------


def _append_query(base_url: str, params) -> str:
    tail = "&".join(f"{k}={v}" for k, v in params)
    return f"{base_url}{'&' if '?' in base_url else '?'}{tail}"


def encode_get_capabilities(endpoint: ServiceEndpoint) -> str:
    return _append_query(endpoint.base_url, [("service", "WPS"), ("request", "GetCapabilities")])


def encode_describe_process(endpoint: ServiceEndpoint, process_id: str) -> str:
    if not process_id:
        raise EmptyIdentifier("DescribeProcess needs a process identifier")
    return _append_query(
        endpoint.base_url,
        [
            ("service", "WPS"),
            ("request", "DescribeProcess"),
            ("version", WPS_VERSION),
            ("identifier", quote(process_id, safe="")),
        ],
    )


# --- document classification --------------------------------------------------

_KNOWN_ROOTS = {
    "Capabilities": "Capabilities",
    "ProcessDescriptions": "ProcessDescriptions",
    "ExecuteResponse": "ExecuteResponse",
    "ExceptionReport": "ExceptionReport",
}


def classify_document(body: bytes, mime_type: str) -> WpsDocument:
    """Name the WPS document kind, or RawOutput for anything else.

    Total: arbitrary bytes classify as RawOutput unless the mime type claims
    XML, in which case malformed bytes are an XmlSyntax error.
    """
    looks_like_xml = bool(_XML_MIME.search(mime_type or ""))
    try:
        root = _parse(body)
    except XmlSyntax:
        if looks_like_xml:
            raise
        return WpsDocument("RawOutput", body, mime_type)
    kind = _KNOWN_ROOTS.get(_local(root.tag), "RawOutput")
    return WpsDocument(kind, body, mime_type)


# --- decoders -----------------------------------------------------------------


def decode_exception_report(doc: bytes) -> ExceptionInfo:
    root = _parse(doc)
    if _local(root.tag) != "ExceptionReport":
        raise NotAnExceptionReport(f"root element is {_local(root.tag)!r}")
    return _exception_info(root)


def encode_exception_report(info: ExceptionInfo) -> bytes:
    root = ET.Element(f"{{{OWS_NS}}}ExceptionReport", {"version": "1.0.0"})
    exception = ET.SubElement(root, f"{{{OWS_NS}}}Exception", {"exceptionCode": info.code})
    if info.locator:
        exception.set("locator", info.locator)
    for message in info.messages:
        ET.SubElement(exception, f"{{{OWS_NS}}}ExceptionText").text = message
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


def _exception_info(report) -> ExceptionInfo:
    exceptions = [el for el in report.iter() if _local(el.tag) == "Exception"]
    if not exceptions:
        return ExceptionInfo(code="NoApplicableCode")
    first = exceptions[0]
    messages = []
    for exc in exceptions:
        for text_el in _findall(exc, "ExceptionText"):
            messages.append((text_el.text or "").strip())
    return ExceptionInfo(
        code=first.get("exceptionCode") or "NoApplicableCode",
        locator=first.get("locator"),
        messages=tuple(messages),
    )


def _raise_if_exception_report(root):
    if _local(root.tag) == "ExceptionReport":
        raise ServiceReportedException(_exception_info(root))


def decode_capabilities(doc: bytes) -> Tuple[ServiceEndpoint, Tuple[ProcessBrief, ...]]:
    """Service metadata and the advertised process list, in document order.

    The returned endpoint's base_url is a placeholder ("the document does not
    know its own address"); load_capabilities substitutes the session's URL.
    """
    root = _parse(doc)
    _raise_if_exception_report(root)
    if _local(root.tag) != "Capabilities":
        raise NotACapabilitiesDocument(f"root element is {_local(root.tag)!r}")
    version = root.get("version", "")
    if version != WPS_VERSION:
        raise UnsupportedVersion(f"service speaks WPS {version!r}, not {WPS_VERSION}")

    identification = _find(root, "ServiceIdentification")
    title = _text(identification, "Title", "") if identification is not None else ""
    abstract = _text(identification, "Abstract", "") if identification is not None else ""

    operations = []
    operations_metadata = _find(root, "OperationsMetadata")
    if operations_metadata is not None:
        for op in _findall(operations_metadata, "Operation"):
            name = op.get("name")
            if name:
                operations.append(name)

    base_url = _UNKNOWN_BASE
    for get_el in root.iter():
        if _local(get_el.tag) == "Get":
            href = get_el.get(f"{{{XLINK_NS}}}href")
            if href:
                base_url = href
                break

    briefs = []
    offerings = _find(root, "ProcessOfferings")
    if offerings is not None:
        for process in _findall(offerings, "Process"):
            briefs.append(
                ProcessBrief(
                    identifier=_text(process, "Identifier", ""),
                    title=_text(process, "Title", ""),
                    abstract=_text(process, "Abstract"),
                )
            )
    metadata = ServiceEndpoint(
        base_url=base_url,
        title=title,
        abstract=abstract,
        wps_version=version,
        supported_operations=tuple(operations),
    )
    return metadata, tuple(briefs)


_KIND_BY_ELEMENT = {
    "LiteralData": Kind.LITERAL,
    "LiteralOutput": Kind.LITERAL,
    "ComplexData": Kind.COMPLEX,
    "ComplexOutput": Kind.COMPLEX,
    "BoundingBoxData": Kind.BOUNDING_BOX,
    "BoundingBoxOutput": Kind.BOUNDING_BOX,
}


def _parameter_shape(element, identifier):
    """(kind, datatype, formats) from an Input/Output element's data child."""
    for child in element:
        kind = _KIND_BY_ELEMENT.get(_local(child.tag))
        if kind is None:
            continue
        if kind == Kind.LITERAL:
            datatype = _text(child, "DataType", "string") or "string"
            # tolerate namespace-prefixed tokens like xs:double
            return kind, datatype.rsplit(":", 1)[-1], ()
        if kind == Kind.COMPLEX:
            formats = []
            for group_name in ("Default", "Supported"):
                group = _find(child, group_name)
                if group is None:
                    continue
                for fmt in _findall(group, "Format"):
                    parsed = Format(
                        mime_type=_text(fmt, "MimeType", ""),
                        encoding=_text(fmt, "Encoding"),
                        schema=_text(fmt, "Schema"),
                    )
                    if parsed not in formats:
                        formats.append(parsed)
            if not formats:
                formats = [Format("text/xml")]
            return kind, None, tuple(formats)
        return kind, None, ()
    raise UnknownParameterKind(f"parameter {identifier!r} declares no recognized data element")


def decode_process_description(doc: bytes) -> ProcessDescription:
    root = _parse(doc)
    _raise_if_exception_report(root)
    if _local(root.tag) != "ProcessDescriptions":
        raise NotADescriptionDocument(f"root element is {_local(root.tag)!r}")
    description = _find(root, "ProcessDescription")
    if description is None:
        raise NotADescriptionDocument("document contains no ProcessDescription")

    brief = ProcessBrief(
        identifier=_text(description, "Identifier", ""),
        title=_text(description, "Title", ""),
        abstract=_text(description, "Abstract"),
    )

    inputs = []
    data_inputs = _find(description, "DataInputs")
    if data_inputs is not None:
        for element in _findall(data_inputs, "Input"):
            identifier = _text(element, "Identifier", "")
            kind, datatype, formats = _parameter_shape(element, identifier)
            inputs.append(
                InputDescriptor(
                    identifier=identifier,
                    title=_text(element, "Title", ""),
                    kind=kind,
                    literal_datatype=datatype,
                    formats=formats,
                    min_occurs=_occurs(element, "minOccurs", identifier),
                    max_occurs=_occurs(element, "maxOccurs", identifier),
                    default_value=_defaulted_literal(element),
                )
            )

    outputs = []
    process_outputs = _find(description, "ProcessOutputs")
    if process_outputs is not None:
        for element in _findall(process_outputs, "Output"):
            identifier = _text(element, "Identifier", "")
            kind, datatype, formats = _parameter_shape(element, identifier)
            outputs.append(
                OutputDescriptor(
                    identifier=identifier,
                    title=_text(element, "Title", ""),
                    kind=kind,
                    literal_datatype=datatype,
                    formats=formats,
                )
            )
    return ProcessDescription(brief=brief, inputs=tuple(inputs), outputs=tuple(outputs))


def _occurs(element, attribute: str, identifier: str) -> int:
    raw = element.get(attribute, "1")
    try:
        return int(raw)
    except ValueError:
        raise NotADescriptionDocument(
            f"parameter {identifier!r} has non-numeric {attribute}={raw!r}"
        ) from None


def _defaulted_literal(input_element) -> Optional[str]:
    literal = _find(input_element, "LiteralData")
    if literal is None:
        return None
    return _text(literal, "DefaultValue")


# --- Execute encoding ---------------------------------------------------------

_XML_DECLARATION = re.compile(rb"^\s*<\?xml[^?]*\?>\s*")


def _as_fragment(payload: bytes) -> bytes:
    """Drop a leading XML declaration; nothing else is touched.

    A declaration can only ever appear at the very start of a document, so a
    payload carrying one could not be embedded at all.  Everything after it is
    spliced bit-for-bit.
    """
    return _XML_DECLARATION.sub(b"", payload, count=1)


def encode_execute(request: ExecuteRequest) -> bytes:
    """The wps:Execute POST body for a built request."""
    root = ET.Element(f"{{{WPS_NS}}}Execute", {"service": "WPS", "version": WPS_VERSION})
    ET.SubElement(root, f"{{{OWS_NS}}}Identifier").text = request.process

    splices = []  # (marker text, verbatim bytes)

    def spliced(parent, payload: bytes):
        marker = f"__geobind_splice_{len(splices)}__"
        splices.append((marker, _as_fragment(payload)))
        parent.text = marker

    data_inputs = ET.SubElement(root, f"{{{WPS_NS}}}DataInputs")
    for input_id, envelope in request.inputs:
        input_el = ET.SubElement(data_inputs, f"{{{WPS_NS}}}Input")
        ET.SubElement(input_el, f"{{{OWS_NS}}}Identifier").text = input_id
        _encode_envelope(input_el, envelope, spliced)

    response_form = ET.SubElement(root, f"{{{WPS_NS}}}ResponseForm")
    if request.raw:
        raw_el = ET.SubElement(response_form, f"{{{WPS_NS}}}RawDataOutput")
        ET.SubElement(raw_el, f"{{{OWS_NS}}}Identifier").text = request.outputs[0]
    else:
        document_el = ET.SubElement(response_form, f"{{{WPS_NS}}}ResponseDocument")
        for output_id in request.outputs:
            output_el = ET.SubElement(document_el, f"{{{WPS_NS}}}Output")
            ET.SubElement(output_el, f"{{{OWS_NS}}}Identifier").text = output_id

    body = ET.tostring(root, encoding="utf-8", xml_declaration=True)
    for marker, payload in splices:
        body = body.replace(marker.encode("ascii"), payload)
    return body


def _encode_envelope(input_el, envelope: DataEnvelope, spliced):
    if isinstance(envelope, Reference):
        ref = ET.SubElement(
            input_el, f"{{{WPS_NS}}}Reference", {f"{{{XLINK_NS}}}href": envelope.href}
        )
        if envelope.mime_type:
            ref.set("mimeType", envelope.mime_type)
        if envelope.method == "POST":
            ref.set("method", "POST")
            body_el = ET.SubElement(ref, f"{{{WPS_NS}}}Body")
            spliced(body_el, envelope.body or b"")
        return

    data = ET.SubElement(input_el, f"{{{WPS_NS}}}Data")
    if isinstance(envelope, InlineLiteral):
        literal = ET.SubElement(data, f"{{{WPS_NS}}}LiteralData")
        if envelope.datatype != "string":
            literal.set("dataType", envelope.datatype)
        literal.text = envelope.value
    elif isinstance(envelope, InlineComplex):
        complex_el = ET.SubElement(data, f"{{{WPS_NS}}}ComplexData", {"mimeType": envelope.mime_type})
        if envelope.encoding:
            complex_el.set("encoding", envelope.encoding)
        if envelope.encoding == "base64":
            complex_el.text = base64.b64encode(envelope.payload).decode("ascii")
        else:
            spliced(complex_el, envelope.payload)
    elif isinstance(envelope, InlineBBox):
        bbox = envelope.bbox
        bbox_el = ET.SubElement(data, f"{{{WPS_NS}}}BoundingBoxData", {"crs": bbox.srs_id})
        lower = ET.SubElement(bbox_el, f"{{{OWS_NS}}}LowerCorner")
        lower.text = f"{format_coord(bbox.min_x)} {format_coord(bbox.min_y)}"
        upper = ET.SubElement(bbox_el, f"{{{OWS_NS}}}UpperCorner")
        upper.text = f"{format_coord(bbox.max_x)} {format_coord(bbox.max_y)}"
    else:
        raise TypeError(f"cannot encode envelope {type(envelope).__name__}")


# --- ExecuteResponse decoding ---------------------------------------------------


def element_payload(element) -> bytes:
    """The content of an element: child elements re-serialized, or bare text.

    Re-serialization reproduces the original bytes exactly when the embedded
    fragment came from this package's own writers (stable prefixes, attribute
    order preserved), which is what the byte-fidelity round trip relies on.
    """
    children = list(element)
    if children:
        return b"".join(ET.tostring(child, encoding="utf-8") for child in children)
    return (element.text or "").encode("utf-8")


def _decode_output_envelope(output_el) -> Optional[DataEnvelope]:
    data = _find(output_el, "Data")
    if data is None:
        reference = _find(output_el, "Reference")
        if reference is not None:
            href = reference.get(f"{{{XLINK_NS}}}href") or reference.get("href") or ""
            return Reference(href=href, mime_type=reference.get("mimeType"))
        return None
    literal = _find(data, "LiteralData")
    if literal is not None:
        value = (literal.text or "").strip()
        datatype = (literal.get("dataType") or "string").rsplit(":", 1)[-1]
        try:
            return InlineLiteral(value=value, datatype=datatype)
        except LiteralParseError:
            # keep the text; the datatype claim just doesn't hold
            return InlineLiteral(value=value, datatype="string")
    complex_el = _find(data, "ComplexData")
    if complex_el is not None:
        payload = element_payload(complex_el)
        encoding = complex_el.get("encoding")
        if encoding == "base64":
            try:
                payload = base64.b64decode(payload, validate=True)
            except (ValueError, binascii.Error):
                encoding = None  # not actually armored; pass through as-is
        return InlineComplex(
            payload=payload,
            mime_type=complex_el.get("mimeType") or "text/xml",
            encoding=encoding,
        )
    bbox_el = _find(data, "BoundingBoxData")
    if bbox_el is not None:
        try:
            lower = (_text(bbox_el, "LowerCorner") or "").split()
            upper = (_text(bbox_el, "UpperCorner") or "").split()
            return InlineBBox(
                BBox(
                    float(lower[0]),
                    float(lower[1]),
                    float(upper[0]),
                    float(upper[1]),
                    srs_id=bbox_el.get("crs") or "EPSG:4326",
                )
            )
        except (IndexError, ValueError, MalformedCoordinates):
            return None
    return None


def decode_execute_response(
    doc: bytes, declared_mime: str, raw_output_id: str = "raw"
) -> ExecuteResult:
    """Total decoder for whatever comes back from an Execute POST.

    Anything that is not a recognizable WPS response — including well-formed
    XML with a foreign root, which is exactly what raw mode produces — counts
    as one successful raw output.
    """
    document = classify_document(doc, declared_mime)
    if document.kind == "ExceptionReport":
        return ExecuteResult(status="Failed", failure=decode_exception_report(doc))
    if document.kind != "ExecuteResponse":
        return ExecuteResult(
            status="Succeeded",
            outputs=((raw_output_id, InlineComplex(payload=doc, mime_type=declared_mime)),),
        )

    root = _parse(doc)
    status = _find(root, "Status")
    failed = _find(status, "ProcessFailed") if status is not None else None
    if failed is not None:
        return ExecuteResult(status="Failed", failure=_exception_info(failed))

    outputs = []
    process_outputs = _find(root, "ProcessOutputs")
    if process_outputs is not None:
        for output_el in _findall(process_outputs, "Output"):
            identifier = _text(output_el, "Identifier", "")
            envelope = _decode_output_envelope(output_el)
            if envelope is not None:
                outputs.append((identifier, envelope))
    if not outputs:
        return ExecuteResult(
            status="Failed",
            failure=ExceptionInfo(
                code="NoApplicableCode", messages=("response carried no outputs",)
            ),
        )
    return ExecuteResult(status="Succeeded", outputs=tuple(outputs))
