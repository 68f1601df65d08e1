"""The discover → describe → bind → execute flow over an injected transport.

Both front ends (command line and JSON bridge) drive sessions through these
helpers, and both emit process descriptions through the same serializer —
that shared code path is what makes their outputs comparable byte for byte.
"""

from __future__ import annotations

import json
from typing import Optional, Tuple

from .errors import ServiceReportedException, TransportError, XmlSyntax
from .model import (
    BindingSession,
    ExecuteResult,
    Kind,
    ProcessBrief,
    ProcessDescription,
    ServiceEndpoint,
    accept_result,
    begin_session,
    build_execute,
    load_capabilities,
    select_process,
)
from .transport import Request, Response, Transport
from .wps_codec import (
    classify_document,
    decode_capabilities,
    decode_exception_report,
    decode_execute_response,
    decode_process_description,
    encode_describe_process,
    encode_execute,
    encode_get_capabilities,
)


def checked_body(response: Response) -> bytes:
    """The response body, unless it is an exception report or an HTTP failure.

    A report wins over the status code — it names the actual problem — so it
    surfaces as ServiceReportedException even on a 4xx/5xx.
    """
    try:
        document = classify_document(response.body, response.content_type or "")
    except XmlSyntax:
        if not response.ok:
            raise TransportError(
                f"upstream returned status {response.status} with an unreadable body",
                status=response.status,
            ) from None
        raise
    if document.kind == "ExceptionReport":
        raise ServiceReportedException(decode_exception_report(response.body))
    if not response.ok:
        raise TransportError(
            f"upstream returned status {response.status}", status=response.status
        )
    return response.body


def fetch_capabilities(
    url: str, transport: Transport
) -> Tuple[ServiceEndpoint, Tuple[ProcessBrief, ...]]:
    response = transport(Request("GET", encode_get_capabilities(ServiceEndpoint(url))))
    return decode_capabilities(checked_body(response))


def fetch_description(url: str, process_id: str, transport: Transport) -> ProcessDescription:
    response = transport(Request("GET", encode_describe_process(ServiceEndpoint(url), process_id)))
    return decode_process_description(checked_body(response))


def open_session(url: str, transport: Transport) -> BindingSession:
    """A session with the service's capabilities already loaded."""
    session = begin_session(url)
    metadata, briefs = fetch_capabilities(url, transport)
    return load_capabilities(session, metadata, briefs)


def describe_and_select(
    session: BindingSession, process_id: str, transport: Transport
) -> BindingSession:
    description = fetch_description(session.endpoint.base_url, process_id, transport)
    return select_process(session, description)


def send_execute(
    session: BindingSession,
    transport: Transport,
    raw_output: Optional[str] = None,
) -> Tuple[BindingSession, ExecuteResult]:
    """Build, post, decode, and fold the outcome back into the session."""
    request = build_execute(session, raw_single_output=raw_output)
    body = encode_execute(request)
    response = transport(
        Request("POST", session.endpoint.base_url, {"Content-Type": "text/xml"}, body)
    )
    result = decode_execute_response(
        response.body, response.content_type or "", raw_output_id=raw_output or "raw"
    )
    return accept_result(session, result), result


# --- the one JSON shape of a process description --------------------------------


def _format_json(fmt) -> dict:
    entry = {"mimeType": fmt.mime_type}
    if fmt.encoding:
        entry["encoding"] = fmt.encoding
    if fmt.schema:
        entry["schema"] = fmt.schema
    return entry


def _parameter_json(descriptor, with_occurs: bool) -> dict:
    entry = {
        "id": descriptor.identifier,
        "title": descriptor.title,
        "kind": descriptor.kind.value,
    }
    if descriptor.kind is Kind.LITERAL:
        entry["datatype"] = descriptor.literal_datatype
    if descriptor.kind is Kind.COMPLEX:
        entry["formats"] = [_format_json(f) for f in descriptor.formats]
    if with_occurs:
        entry["minOccurs"] = descriptor.min_occurs
        entry["maxOccurs"] = descriptor.max_occurs
    return entry


def description_to_json(description: ProcessDescription) -> dict:
    """The wire shape served by /api/process and printed by describe --json."""
    return {
        "id": description.brief.identifier,
        "title": description.brief.title,
        "abstract": description.brief.abstract or "",
        "inputs": [_parameter_json(d, with_occurs=True) for d in description.inputs],
        "outputs": [_parameter_json(d, with_occurs=False) for d in description.outputs],
    }


def canonical_json(payload) -> str:
    """Stable serialization so equal content means equal bytes."""
    return json.dumps(payload, indent=2, sort_keys=True)
