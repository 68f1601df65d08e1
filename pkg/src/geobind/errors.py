"""Error types shared across the geobind client stack."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExceptionInfo:
    """Structured content of an OWS exception reported by a remote service."""

    code: str
    locator: str | None = None
    messages: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.code:
            raise ValueError("exception code must be non-empty")


class GeobindError(Exception):
    """Base class for every error this package raises deliberately."""


# URLs and identifiers

class MalformedUrl(GeobindError):
    pass


class EmptyIdentifier(GeobindError):
    pass


# Binding session state machine

class StageViolation(GeobindError):
    pass


class DuplicateProcessId(GeobindError):
    pass


class UnknownProcess(GeobindError):
    pass


class UnknownInput(GeobindError):
    pass


class UnknownOutput(GeobindError):
    pass


class KindMismatch(GeobindError):
    pass


class OccurrenceExceeded(GeobindError):
    pass


class LiteralParseError(GeobindError):
    pass


class UnresolvedClientFetch(GeobindError):
    pass


class UnsupportedVersion(GeobindError):
    pass


class BindingViolations(GeobindError):
    """Raised when a request is built over bindings that still have violations."""

    def __init__(self, violations):
        super().__init__(f"{len(violations)} binding violation(s)")
        self.violations = list(violations)


# XML decoding

class XmlSyntax(GeobindError):
    pass


class NotACapabilitiesDocument(GeobindError):
    pass


class NotADescriptionDocument(GeobindError):
    pass


class NotAnExecuteRequest(GeobindError):
    pass


class NotAnExceptionReport(GeobindError):
    pass


class NotAWfsCapabilities(GeobindError):
    pass


class UnknownParameterKind(GeobindError):
    pass


class ServiceReportedException(GeobindError):
    """The remote service answered with an ows:ExceptionReport."""

    def __init__(self, info: ExceptionInfo):
        detail = info.messages[0] if info.messages else ""
        super().__init__(f"{info.code}: {detail}" if detail else info.code)
        self.info = info


# Geometry and GML

class UnsupportedGeometry(GeobindError):
    pass


class MalformedCoordinates(GeobindError):
    pass


class NoGeometryProperty(GeobindError):
    pass


class MixedSrs(GeobindError):
    pass


# Geoprocessing kernel

class SelfIntersectingInput(GeobindError):
    pass


class NonPositiveDistance(GeobindError):
    pass


class DegenerateIntersection(GeobindError):
    pass


class ZeroMeasure(GeobindError):
    pass


# WFS client

class ConflictingFilters(GeobindError):
    pass


class AmbiguousGeometry(GeobindError):
    pass


# Transport and servers

class TransportError(GeobindError):
    """A request could not be completed at the HTTP level."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class PortInUse(GeobindError):
    pass


class ConfigError(GeobindError):
    pass


class DatasetLoadError(GeobindError):
    pass
