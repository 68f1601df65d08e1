"""Service/process domain types and the staged binding session.

A session walks Start -> CapabilitiesLoaded -> ProcessDescribed ->
InputsBound -> Completed/Failed.  Every value here is immutable: operations
return a new session and leave their argument untouched, so a caller that
catches StageViolation still holds a usable, uncorrupted session.  That is
also what lets the HTTP facade stay stateless -- a session can be rebuilt
from plain data on every request.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Tuple, Union
from urllib.parse import urlparse

from .errors import (
    BindingViolations,
    DuplicateProcessId,
    KindMismatch,
    LiteralParseError,
    MalformedUrl,
    OccurrenceExceeded,
    StageViolation,
    UnknownInput,
    UnknownOutput,
    UnknownProcess,
    UnresolvedClientFetch,
    UnsupportedVersion,
    ExceptionInfo,
)
from .gml import BBox

WPS_VERSION = "1.0.0"


class Stage(str, Enum):
    START = "Start"
    CAPABILITIES_LOADED = "CapabilitiesLoaded"
    PROCESS_DESCRIBED = "ProcessDescribed"
    INPUTS_BOUND = "InputsBound"
    COMPLETED = "Completed"
    FAILED = "Failed"


class Kind(str, Enum):
    LITERAL = "Literal"
    COMPLEX = "Complex"
    BOUNDING_BOX = "BoundingBox"


class FetchMode(str, Enum):
    SEND_REFERENCE = "SendReference"
    FETCH_CLIENT_SIDE = "FetchClientSide"


LITERAL_DATATYPES = ("string", "integer", "double", "boolean")

_INTEGER_RE = re.compile(r"^[+-]?[0-9]+$")
_DOUBLE_RE = re.compile(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?$")
_BOOLEANS = {"true": True, "false": False, "1": True, "0": False}


def parse_literal(value: str, datatype: str):
    """Parse a literal's lexical form under an XML-schema-style datatype.

    Returns the Python value; raises LiteralParseError when the text is not
    in the datatype's lexical space (deliberately stricter than bare
    int()/float(), which accept underscores and similar Pythonisms).
    """
    if datatype == "string":
        return value
    if datatype == "integer":
        if not _INTEGER_RE.match(value):
            raise LiteralParseError(f"{value!r} is not an integer")
        return int(value)
    if datatype == "double":
        if value in ("INF", "-INF", "NaN"):
            return float(value.replace("INF", "inf"))
        if not _DOUBLE_RE.match(value):
            raise LiteralParseError(f"{value!r} is not a double")
        return float(value)
    if datatype == "boolean":
        if value not in _BOOLEANS:
            raise LiteralParseError(f"{value!r} is not a boolean")
        return _BOOLEANS[value]
    raise LiteralParseError(f"unknown literal datatype {datatype!r}")


def _require_absolute_http_url(url: str, error=MalformedUrl):
    parts = urlparse(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise error(f"not an absolute http(s) URL: {url!r}")
    return url


@dataclass(frozen=True)
class ServiceEndpoint:
    base_url: str
    title: str = ""
    abstract: str = ""
    wps_version: str = WPS_VERSION
    supported_operations: Tuple[str, ...] = ()

    def __post_init__(self):
        _require_absolute_http_url(self.base_url)
        if self.wps_version != WPS_VERSION:
            raise UnsupportedVersion(
                f"only WPS {WPS_VERSION} is supported, got {self.wps_version!r}"
            )


@dataclass(frozen=True)
class ProcessBrief:
    identifier: str
    title: str = ""
    abstract: Optional[str] = None

    def __post_init__(self):
        if not self.identifier:
            raise ValueError("process identifier must be non-empty")


@dataclass(frozen=True)
class Format:
    mime_type: str
    encoding: Optional[str] = None
    schema: Optional[str] = None


@dataclass(frozen=True)
class InputDescriptor:
    identifier: str
    title: str = ""
    kind: Kind = Kind.LITERAL
    literal_datatype: Optional[str] = None
    formats: Tuple[Format, ...] = ()
    min_occurs: int = 1
    max_occurs: int = 1
    default_value: Optional[str] = None

    def __post_init__(self):
        _check_descriptor_shape(self)
        if self.min_occurs < 0 or self.max_occurs < 1 or self.min_occurs > self.max_occurs:
            raise ValueError(
                f"{self.identifier}: occurs range {self.min_occurs}..{self.max_occurs} is invalid"
            )


@dataclass(frozen=True)
class OutputDescriptor:
    identifier: str
    title: str = ""
    kind: Kind = Kind.LITERAL
    literal_datatype: Optional[str] = None
    formats: Tuple[Format, ...] = ()

    def __post_init__(self):
        _check_descriptor_shape(self)


def _check_descriptor_shape(d):
    if not d.identifier:
        raise ValueError("parameter identifier must be non-empty")
    if d.kind == Kind.LITERAL:
        if d.literal_datatype not in LITERAL_DATATYPES:
            raise ValueError(f"{d.identifier}: literal parameters need a scalar datatype")
    elif d.literal_datatype is not None:
        raise ValueError(f"{d.identifier}: only literal parameters carry a datatype")
    if d.kind == Kind.COMPLEX:
        if not d.formats:
            raise ValueError(f"{d.identifier}: complex parameters need at least one format")
    elif d.formats:
        raise ValueError(f"{d.identifier}: only complex parameters carry formats")


@dataclass(frozen=True)
class ProcessDescription:
    brief: ProcessBrief
    inputs: Tuple[InputDescriptor, ...]
    outputs: Tuple[OutputDescriptor, ...]

    def __post_init__(self):
        input_ids = [d.identifier for d in self.inputs]
        output_ids = [d.identifier for d in self.outputs]
        if len(set(input_ids)) != len(input_ids):
            raise ValueError(f"{self.brief.identifier}: duplicate input identifiers")
        if len(set(output_ids)) != len(output_ids):
            raise ValueError(f"{self.brief.identifier}: duplicate output identifiers")
        if not self.outputs:
            raise ValueError(f"{self.brief.identifier}: a process must declare an output")

    def input(self, identifier: str) -> Optional[InputDescriptor]:
        for d in self.inputs:
            if d.identifier == identifier:
                return d
        return None


# --- data envelopes ---------------------------------------------------------


@dataclass(frozen=True)
class InlineLiteral:
    value: str
    datatype: str = "string"

    def __post_init__(self):
        parse_literal(self.value, self.datatype)


@dataclass(frozen=True)
class InlineComplex:
    payload: bytes
    mime_type: str
    encoding: Optional[str] = None


@dataclass(frozen=True)
class InlineBBox:
    bbox: BBox


@dataclass(frozen=True)
class Reference:
    href: str
    method: str = "GET"
    body: Optional[bytes] = None
    mime_type: Optional[str] = None

    def __post_init__(self):
        _require_absolute_http_url(self.href)
        if self.method not in ("GET", "POST"):
            raise ValueError(f"reference method must be GET or POST, got {self.method!r}")
        if self.method == "GET" and self.body is not None:
            raise ValueError("a GET reference carries no body")


DataEnvelope = Union[InlineLiteral, InlineComplex, InlineBBox, Reference]


def _envelope_fits(kind: Kind, envelope: DataEnvelope) -> bool:
    if kind == Kind.LITERAL:
        return isinstance(envelope, InlineLiteral)
    if kind == Kind.COMPLEX:
        # a reference is dereferenced to structured data, never a scalar
        return isinstance(envelope, (InlineComplex, Reference))
    return isinstance(envelope, InlineBBox)


# --- results and requests ----------------------------------------------------


@dataclass(frozen=True)
class ExecuteResult:
    status: str  # "Succeeded" | "Failed"
    outputs: Tuple[Tuple[str, DataEnvelope], ...] = ()
    failure: Optional[ExceptionInfo] = None

    def __post_init__(self):
        if self.status == "Succeeded":
            if not self.outputs or self.failure is not None:
                raise ValueError("a succeeded result carries outputs and no failure")
        elif self.status == "Failed":
            if self.failure is None:
                raise ValueError("a failed result carries its failure")
        else:
            raise ValueError(f"unknown result status {self.status!r}")

    def output(self, identifier: str) -> Optional[DataEnvelope]:
        for out_id, envelope in self.outputs:
            if out_id == identifier:
                return envelope
        return None


@dataclass(frozen=True)
class ExecuteRequest:
    process: str
    inputs: Tuple[Tuple[str, DataEnvelope], ...]
    outputs: Tuple[str, ...]
    raw: bool = False


@dataclass(frozen=True)
class Violation:
    code: str  # MissingRequired | OccurrenceExceeded | KindMismatch
    input_id: str


# --- the session -------------------------------------------------------------


@dataclass(frozen=True)
class BindingSession:
    stage: Stage
    endpoint: Optional[ServiceEndpoint] = None
    processes: Tuple[ProcessBrief, ...] = ()
    selected: Optional[ProcessDescription] = None
    bindings: Mapping[str, Tuple[DataEnvelope, ...]] = field(default_factory=dict)
    fetch_mode: Mapping[str, FetchMode] = field(default_factory=dict)
    result: Optional[ExecuteResult] = None


def _expect_stage(session: BindingSession, *stages: Stage):
    if session.stage not in stages:
        wanted = " or ".join(s.value for s in stages)
        raise StageViolation(f"operation requires stage {wanted}, session is {session.stage.value}")


def begin_session(url: str) -> BindingSession:
    """Open a session against a service URL; nothing is fetched yet."""
    _require_absolute_http_url(url)
    return BindingSession(stage=Stage.START, endpoint=ServiceEndpoint(base_url=url))


def load_capabilities(
    session: BindingSession,
    metadata: ServiceEndpoint,
    processes: Tuple[ProcessBrief, ...],
) -> BindingSession:
    _expect_stage(session, Stage.START)
    seen = set()
    for brief in processes:
        if brief.identifier in seen:
            raise DuplicateProcessId(f"process {brief.identifier!r} advertised twice")
        seen.add(brief.identifier)
    return replace(
        session,
        stage=Stage.CAPABILITIES_LOADED,
        endpoint=replace(metadata, base_url=session.endpoint.base_url),
        processes=tuple(processes),
    )


def select_process(session: BindingSession, description: ProcessDescription) -> BindingSession:
    # re-selection is expressed by calling this again on the (immutable)
    # CapabilitiesLoaded snapshot, not by rewinding a later session
    _expect_stage(session, Stage.CAPABILITIES_LOADED)
    identifier = description.brief.identifier
    if identifier not in {p.identifier for p in session.processes}:
        raise UnknownProcess(f"process {identifier!r} is not advertised by this service")
    return replace(
        session,
        stage=Stage.PROCESS_DESCRIBED,
        selected=description,
        bindings={},
        fetch_mode={},
        result=None,
    )


def bind_input(session: BindingSession, input_id: str, envelope: DataEnvelope) -> BindingSession:
    _expect_stage(session, Stage.PROCESS_DESCRIBED, Stage.INPUTS_BOUND)
    descriptor = session.selected.input(input_id)
    if descriptor is None:
        raise UnknownInput(f"process {session.selected.brief.identifier!r} has no input {input_id!r}")
    if not _envelope_fits(descriptor.kind, envelope):
        raise KindMismatch(
            f"{input_id}: {type(envelope).__name__} cannot satisfy a {descriptor.kind.value} input"
        )
    if isinstance(envelope, InlineLiteral):
        try:
            parse_literal(envelope.value, descriptor.literal_datatype)
        except LiteralParseError:
            raise LiteralParseError(
                f"{input_id}: {envelope.value!r} is not a {descriptor.literal_datatype}"
            ) from None
    bound = session.bindings.get(input_id, ())
    if len(bound) + 1 > descriptor.max_occurs:
        raise OccurrenceExceeded(
            f"{input_id} accepts at most {descriptor.max_occurs} value(s)"
        )
    bindings = dict(session.bindings)
    bindings[input_id] = bound + (envelope,)
    return _with_recomputed_stage(replace(session, bindings=bindings))


def clear_input(session: BindingSession, input_id: str) -> BindingSession:
    """Drop every envelope bound to one input (the append-only counterpart)."""
    _expect_stage(session, Stage.PROCESS_DESCRIBED, Stage.INPUTS_BOUND)
    if session.selected.input(input_id) is None:
        raise UnknownInput(f"process {session.selected.brief.identifier!r} has no input {input_id!r}")
    bindings = {k: v for k, v in session.bindings.items() if k != input_id}
    fetch_mode = {k: v for k, v in session.fetch_mode.items() if k != input_id}
    return _with_recomputed_stage(replace(session, bindings=bindings, fetch_mode=fetch_mode))


def set_fetch_mode(session: BindingSession, input_id: str, mode: FetchMode) -> BindingSession:
    """Choose between sending a bound reference or resolving it client-side."""
    _expect_stage(session, Stage.PROCESS_DESCRIBED, Stage.INPUTS_BOUND)
    if session.selected.input(input_id) is None:
        raise UnknownInput(f"process {session.selected.brief.identifier!r} has no input {input_id!r}")
    if not any(isinstance(e, Reference) for e in session.bindings.get(input_id, ())):
        raise KindMismatch(f"{input_id}: fetch mode applies only to reference bindings")
    fetch_mode = dict(session.fetch_mode)
    fetch_mode[input_id] = mode
    return replace(session, fetch_mode=fetch_mode)


def _with_recomputed_stage(session: BindingSession) -> BindingSession:
    stage = Stage.INPUTS_BOUND if not validate_bindings(session) else Stage.PROCESS_DESCRIBED
    if stage != session.stage:
        session = replace(session, stage=stage)
    return session


def validate_bindings(session: BindingSession):
    """Every unmet occurrence/kind constraint, in input declaration order.

    Exhaustive rather than fail-fast so a form can flag all fields at once;
    an empty list is exactly the green light for build_execute.
    """
    _expect_stage(session, Stage.PROCESS_DESCRIBED, Stage.INPUTS_BOUND)
    violations = []
    for descriptor in session.selected.inputs:
        bound = session.bindings.get(descriptor.identifier, ())
        if len(bound) < descriptor.min_occurs:
            violations.append(Violation("MissingRequired", descriptor.identifier))
        if len(bound) > descriptor.max_occurs:
            violations.append(Violation("OccurrenceExceeded", descriptor.identifier))
        if any(not _envelope_fits(descriptor.kind, e) for e in bound):
            violations.append(Violation("KindMismatch", descriptor.identifier))
    return violations


def build_execute(
    session: BindingSession, raw_single_output: Optional[str] = None
) -> ExecuteRequest:
    """Assemble the request value; performs no network activity."""
    violations = validate_bindings(session)
    if violations:
        raise BindingViolations(violations)
    description = session.selected
    for descriptor in description.inputs:
        mode = session.fetch_mode.get(descriptor.identifier)
        if mode == FetchMode.FETCH_CLIENT_SIDE and any(
            isinstance(e, Reference) for e in session.bindings.get(descriptor.identifier, ())
        ):
            raise UnresolvedClientFetch(
                f"{descriptor.identifier} is marked for client-side fetch but still holds a reference"
            )
    if raw_single_output is not None:
        if raw_single_output not in {o.identifier for o in description.outputs}:
            raise UnknownOutput(
                f"process {description.brief.identifier!r} has no output {raw_single_output!r}"
            )
        outputs = (raw_single_output,)
    else:
        outputs = tuple(o.identifier for o in description.outputs)
    inputs = []
    for descriptor in description.inputs:
        for envelope in session.bindings.get(descriptor.identifier, ()):
            inputs.append((descriptor.identifier, envelope))
    return ExecuteRequest(
        process=description.brief.identifier,
        inputs=tuple(inputs),
        outputs=outputs,
        raw=raw_single_output is not None,
    )


def accept_result(session: BindingSession, result: ExecuteResult) -> BindingSession:
    _expect_stage(session, Stage.INPUTS_BOUND)
    stage = Stage.COMPLETED if result.status == "Succeeded" else Stage.FAILED
    return replace(session, stage=stage, result=result)
