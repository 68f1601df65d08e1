"""JSON-over-HTTP facade for browsers and scripts that don't speak XML.

The service is stateless: each request carries everything needed to rebuild
the client-side state (an execute call re-describes the process, re-binds the
inputs, validates, and dispatches), so any number of bridge instances behind
a balancer behave identically and a test can replay requests in any order.
The only shared structure is a bounded, time-limited cache of process
descriptions, which saves the extra DescribeProcess round trip that
statelessness would otherwise cost on every execute.

Responses always carry either ``{"ok": ...}`` or ``{"error": {...}}``; a
fault reported by the upstream service keeps its original code under
``error.remote``.  GeoJSON is the boundary format — GML stays on the wire
between the bridge and the WPS/WFS services.
"""

from __future__ import annotations

import base64
import json
import mimetypes
import os
import re
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple
from urllib.parse import parse_qs, urlsplit

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover — 3.10 fallback
    import tomli as tomllib

from . import client, wfs
from .errors import (
    AmbiguousGeometry,
    BindingViolations,
    ConfigError,
    ConflictingFilters,
    ExceptionInfo,
    GeobindError,
    ServiceReportedException,
    TransportError,
    UnknownOutput,
    UnsupportedVersion,
)
from .gml import (
    BBox,
    collection_to_geojson,
    format_coord,
    geometry_to_geojson,
    parse_feature_collection,
    parse_geometry,
    parse_interchange,
    serialize_geometry,
)
from .httpd import HandlerServer, serve_handler
from .model import (
    FetchMode,
    InlineBBox,
    InlineComplex,
    InlineLiteral,
    Kind,
    ProcessDescription,
    Reference,
    ServiceEndpoint,
    begin_session,
    load_capabilities,
    select_process,
    bind_input,
    set_fetch_mode,
    validate_bindings,
)
from .transport import HttpTransport, Request, Response, Transport

CONFIG_ENV = "GEOBIND_BRIDGE_CONFIG"

_XML_MIME = re.compile(r"xml", re.IGNORECASE)


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class BridgeConfig:
    """Deployment knobs; the defaults run a loopback-only demo instance."""

    listen_address: str = "127.0.0.1:0"
    allowed_upstreams: Tuple[str, ...] = ("127.0.0.1", "localhost", "::1")
    describe_cache_seconds: float = 60.0
    default_endpoints: Tuple[Tuple[str, str], ...] = ()
    static_dir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "allowed_upstreams", tuple(self.allowed_upstreams))
        object.__setattr__(
            self,
            "default_endpoints",
            tuple((str(name), str(url)) for name, url in self.default_endpoints),
        )
        names = [name for name, _ in self.default_endpoints]
        if len(set(names)) != len(names):
            raise ConfigError("default endpoint names must be unique")
        if self.describe_cache_seconds < 0:
            raise ConfigError("describe_cache_seconds must not be negative")
        split_listen_address(self.listen_address)  # shape check up front


def split_listen_address(address: str) -> Tuple[str, int]:
    """Break ``host:port`` apart; brackets around an IPv6 host are accepted."""
    host, sep, port_text = address.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"listen_address must look like host:port, got {address!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"listen_address port must be an integer, got {port_text!r}") from None
    if not 0 <= port <= 65535:
        raise ConfigError(f"listen_address port {port} is out of range")
    return host.strip("[]"), port


def _config_str(table: dict, key: str) -> Optional[str]:
    value = table.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string")
    return value


def load_bridge_config(path: Optional[str] = None) -> BridgeConfig:
    """Read a TOML config file; without one, the defaults apply.

    The path is taken from the argument, else from the GEOBIND_BRIDGE_CONFIG
    environment variable, else no file is read at all.  Unknown keys are
    rejected rather than ignored so a typo cannot silently disable a setting.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if path is None:
        return BridgeConfig()
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        table = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return bridge_config_from_table(table, origin=str(path))


BRIDGE_CONFIG_KEYS = frozenset(
    {
        "listen_address",
        "allowed_upstreams",
        "describe_cache_seconds",
        "default_endpoints",
        "static_dir",
    }
)

# the command-line front end reads the same file; its keys are not errors here
_SIBLING_CONFIG_KEYS = frozenset({"output_format"})


def bridge_config_from_table(table: dict, origin: str = "config") -> BridgeConfig:
    unknown = sorted(set(table) - BRIDGE_CONFIG_KEYS - _SIBLING_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{origin}: unknown key(s) {', '.join(unknown)}")

    kwargs = {}
    listen = _config_str(table, "listen_address")
    if listen is not None:
        kwargs["listen_address"] = listen
    static_dir = _config_str(table, "static_dir")
    if static_dir is not None:
        kwargs["static_dir"] = static_dir

    upstreams = table.get("allowed_upstreams")
    if upstreams is not None:
        if not isinstance(upstreams, list) or not all(isinstance(u, str) for u in upstreams):
            raise ConfigError(f"{origin}: allowed_upstreams must be a list of strings")
        kwargs["allowed_upstreams"] = tuple(upstreams)

    ttl = table.get("describe_cache_seconds")
    if ttl is not None:
        if isinstance(ttl, bool) or not isinstance(ttl, (int, float)):
            raise ConfigError(f"{origin}: describe_cache_seconds must be a number")
        kwargs["describe_cache_seconds"] = float(ttl)

    endpoints = table.get("default_endpoints")
    if endpoints is not None:
        kwargs["default_endpoints"] = endpoint_pairs_from_config(endpoints, origin)

    return BridgeConfig(**kwargs)


def endpoint_pairs_from_config(value, origin: str) -> Tuple[Tuple[str, str], ...]:
    """The default_endpoints table shape, shared with the command-line config."""
    if not isinstance(value, list):
        raise ConfigError(f"{origin}: default_endpoints must be a list of tables")
    pairs = []
    for entry in value:
        if (
            not isinstance(entry, dict)
            or set(entry) != {"name", "url"}
            or not all(isinstance(v, str) for v in entry.values())
        ):
            raise ConfigError(f"{origin}: each default endpoint needs exactly name and url strings")
        pairs.append((entry["name"], entry["url"]))
    return tuple(pairs)


# --- the describe cache ------------------------------------------------------


class _DescribeCache:
    """Bounded TTL cache of process descriptions, safe under concurrent use."""

    def __init__(self, ttl: float, capacity: int = 128):
        self._ttl = ttl
        self._capacity = capacity
        self._lock = threading.Lock()
        self._entries: "OrderedDict[Tuple[str, str], Tuple[float, ProcessDescription]]" = (
            OrderedDict()
        )

    def get(self, key: Tuple[str, str]) -> Optional[ProcessDescription]:
        if self._ttl <= 0:
            return None
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                return None
            stamp, description = entry
            if time.monotonic() - stamp > self._ttl:
                del self._entries[key]
                return None
            self._entries.move_to_end(key)
            return description

    def put(self, key: Tuple[str, str], description: ProcessDescription) -> None:
        if self._ttl <= 0:
            return
        with self._lock:
            self._entries[key] = (time.monotonic(), description)
            self._entries.move_to_end(key)
            while len(self._entries) > self._capacity:
                self._entries.popitem(last=False)


# --- faults and the response envelope ----------------------------------------


class _ApiError(Exception):
    """Internal carrier for one JSON error response."""

    def __init__(
        self,
        status: int,
        code: str,
        message: str,
        remote: Optional[ExceptionInfo] = None,
        violations: Optional[List[dict]] = None,
    ):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.remote = remote
        self.violations = violations


def _json_response(status: int, payload) -> Response:
    body = (json.dumps(payload, sort_keys=True) + "\n").encode("utf-8")
    return Response(status, {"Content-Type": "application/json"}, body)


def _ok(payload) -> Response:
    return _json_response(200, {"ok": payload})


def _remote_json(info: ExceptionInfo) -> dict:
    entry = {"code": info.code, "messages": list(info.messages)}
    if info.locator:
        entry["locator"] = info.locator
    return entry


def _error_response(fault: _ApiError) -> Response:
    error = {"code": fault.code, "message": fault.message}
    if fault.remote is not None:
        error["remote"] = _remote_json(fault.remote)
    if fault.violations is not None:
        error["violations"] = fault.violations
    return _json_response(fault.status, {"error": error})


def _first_message(info: ExceptionInfo) -> str:
    return info.messages[0] if info.messages else info.code


def _upstream_fault(exc: GeobindError) -> _ApiError:
    """Sort an upstream-interaction failure into the error vocabulary."""
    if isinstance(exc, ServiceReportedException):
        return _ApiError(502, "RemoteException", _first_message(exc.info), remote=exc.info)
    if isinstance(exc, UnsupportedVersion):
        return _ApiError(422, "UnsupportedVersion", str(exc))
    if isinstance(exc, TransportError):
        return _ApiError(502, "UpstreamUnreachable", str(exc))
    # undecodable bodies and protocol surprises: the upstream answered, but
    # with nothing we can use — same remedy for the caller as no answer
    return _ApiError(502, "UpstreamUnreachable", f"upstream sent an unusable response: {exc}")


def _json_body(request: Request) -> dict:
    if not request.body:
        raise _ApiError(400, "MalformedBody", "request carries no JSON body")
    try:
        payload = json.loads(request.body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _ApiError(400, "MalformedBody", f"body is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise _ApiError(400, "MalformedBody", "body must be a JSON object")
    return payload


def _required_field(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value:
        raise _ApiError(400, "MalformedBody", f"body field {key!r} must be a non-empty string")
    return value


# --- the service -------------------------------------------------------------

_FALLBACK_PAGE = b"""<!doctype html>
<title>geobind bridge</title>
<h1>geobind bridge</h1>
<p>No web UI is installed. The JSON API is live under <code>/api/</code>:</p>
<ul>
<li>GET /api/capabilities?url=&hellip;</li>
<li>GET /api/process?url=&hellip;&amp;id=&hellip;</li>
<li>POST /api/execute</li>
<li>GET /api/wfs/layers?url=&hellip;</li>
<li>POST /api/wfs/features</li>
<li>GET /api/defaults</li>
</ul>
"""


class BridgeService:
    """The request handler; ``handle`` is a plain Request -> Response callable.

    One instance serves many threads: everything it touches is immutable
    except the describe cache, which locks internally.
    """

    def __init__(self, config: Optional[BridgeConfig] = None, upstream: Optional[Transport] = None):
        self.config = config or BridgeConfig()
        self.upstream = upstream if upstream is not None else HttpTransport(timeout=10.0)
        self._descriptions = _DescribeCache(self.config.describe_cache_seconds)

    # -- dispatch --

    def handle(self, request: Request) -> Response:
        try:
            return self._route(request)
        except _ApiError as fault:
            return _error_response(fault)
        except Exception as exc:  # absolute backstop: never leak a traceback
            return _error_response(_ApiError(500, "InternalError", str(exc)))

    def _route(self, request: Request) -> Response:
        parts = urlsplit(request.url)
        path = parts.path
        query = parse_qs(parts.query)
        routes = {
            "/api/capabilities": ("GET", lambda: self._capabilities(query)),
            "/api/process": ("GET", lambda: self._process(query)),
            "/api/execute": ("POST", lambda: self._execute(request)),
            "/api/wfs/layers": ("GET", lambda: self._wfs_layers(query)),
            "/api/wfs/features": ("POST", lambda: self._wfs_features(request)),
            "/api/defaults": ("GET", lambda: self._defaults()),
        }
        found = routes.get(path)
        if found is not None:
            method, run = found
            if request.method != method:
                raise _ApiError(405, "MethodNotAllowed", f"{path} accepts {method} only")
            return run()
        if path.startswith("/api/"):
            raise _ApiError(404, "UnknownRoute", f"no such endpoint: {path}")
        return self._static(path)

    # -- shared plumbing --

    def _required_param(self, query: dict, name: str, code: str) -> str:
        values = query.get(name) or []
        if not values or not values[0]:
            raise _ApiError(400, code, f"query parameter {name!r} is required")
        return values[0]

    def _checked_upstream(self, url: str) -> str:
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https") or not parts.hostname:
            raise _ApiError(400, "MalformedUrl", f"{url!r} is not an absolute http(s) URL")
        allowed = self.config.allowed_upstreams
        if "*" not in allowed and parts.hostname not in allowed:
            raise _ApiError(
                403,
                "DisallowedUpstream",
                f"host {parts.hostname!r} is not in the allowed upstream list",
            )
        return url

    def _describe(self, url: str, process_id: str) -> ProcessDescription:
        key = (url, process_id)
        cached = self._descriptions.get(key)
        if cached is not None:
            return cached
        try:
            description = client.fetch_description(url, process_id, self.upstream)
        except ServiceReportedException as exc:
            if exc.info.locator == "identifier":
                raise _ApiError(
                    404, "UnknownProcess", _first_message(exc.info), remote=exc.info
                ) from None
            raise _upstream_fault(exc) from None
        except GeobindError as exc:
            raise _upstream_fault(exc) from None
        self._descriptions.put(key, description)
        return description

    # -- WPS endpoints --

    def _capabilities(self, query: dict) -> Response:
        url = self._checked_upstream(self._required_param(query, "url", "MissingUrl"))
        try:
            endpoint, briefs = client.fetch_capabilities(url, self.upstream)
        except GeobindError as exc:
            raise _upstream_fault(exc) from None
        return _ok(
            {
                "title": endpoint.title,
                "abstract": endpoint.abstract,
                "version": endpoint.wps_version,
                "processCount": len(briefs),
                "processes": [
                    {"id": b.identifier, "title": b.title, "abstract": b.abstract or ""}
                    for b in briefs
                ],
            }
        )

    def _process(self, query: dict) -> Response:
        url = self._checked_upstream(self._required_param(query, "url", "MissingUrl"))
        process_id = self._required_param(query, "id", "MissingId")
        description = self._describe(url, process_id)
        return _ok(client.description_to_json(description))

    def _execute(self, request: Request) -> Response:
        body = _json_body(request)
        url = self._checked_upstream(_required_field(body, "url"))
        process_id = _required_field(body, "process")
        inputs = body.get("inputs", [])
        if not isinstance(inputs, list):
            raise _ApiError(400, "MalformedBody", "inputs must be a list")
        raw_output = body.get("raw")
        if raw_output is not None and (not isinstance(raw_output, str) or not raw_output):
            raise _ApiError(400, "MalformedBody", "raw must name an output")

        description = self._describe(url, process_id)
        session = select_process(
            load_capabilities(begin_session(url), ServiceEndpoint(url), (description.brief,)),
            description,
        )

        violations: List[dict] = []
        for entry in inputs:
            input_id, envelope, mode = self._input_envelope(entry, description, violations)
            if envelope is None:
                continue
            try:
                session = bind_input(session, input_id, envelope)
            except GeobindError as exc:
                violations.append({"input": input_id, "violation": type(exc).__name__})
                continue
            if mode is not None:
                session = set_fetch_mode(session, input_id, mode)
        if not violations:
            violations = [
                {"input": v.input_id, "violation": v.code} for v in validate_bindings(session)
            ]
        if violations:
            raise _ApiError(
                422,
                "ValidationFailed",
                "the inputs do not satisfy the process contract",
                violations=violations,
            )

        try:
            _, result = client.send_execute(session, self.upstream, raw_output=raw_output)
        except UnknownOutput as exc:
            raise _ApiError(422, "UnknownOutput", str(exc)) from None
        except BindingViolations as exc:  # unreachable: validated above
            raise _ApiError(
                422,
                "ValidationFailed",
                "the inputs do not satisfy the process contract",
                violations=[{"input": v.input_id, "violation": v.code} for v in exc.violations],
            ) from None
        except GeobindError as exc:
            raise _upstream_fault(exc) from None

        if result.status != "Succeeded":
            failure = result.failure
            raise _ApiError(502, "RemoteException", _first_message(failure), remote=failure)
        return _ok(
            {
                "status": result.status.lower(),
                "outputs": [self._output_json(out_id, env) for out_id, env in result.outputs],
            }
        )

    def _input_envelope(self, entry, description: ProcessDescription, violations: List[dict]):
        """Turn one JSON input entry into (id, envelope, fetch_mode).

        Returns (id, None, None) after recording a violation when the value
        cannot even be expressed as an envelope (e.g. a literal that does not
        parse as the declared datatype) — binding problems are collected, not
        fail-fast, so a form can light up every bad field at once.
        """
        if not isinstance(entry, dict):
            raise _ApiError(400, "MalformedBody", "every input must be a JSON object")
        input_id = _required_field(entry, "id")
        carried = [k for k in ("literal", "geometryGeoJson", "bbox", "reference") if k in entry]
        if len(carried) != 1:
            raise _ApiError(
                400,
                "MalformedBody",
                f"input {input_id!r} must carry exactly one of "
                "literal, geometryGeoJson, bbox, reference",
            )
        kind = carried[0]
        value = entry[kind]

        if kind == "literal":
            descriptor = description.input(input_id)
            datatype = (
                descriptor.literal_datatype
                if descriptor is not None and descriptor.kind is Kind.LITERAL
                else "string"
            )
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = format_coord(value)
            elif isinstance(value, (int, str)):
                text = str(value)
            else:
                raise _ApiError(
                    400, "MalformedBody", f"input {input_id!r}: literal must be a scalar"
                )
            try:
                return input_id, InlineLiteral(text, datatype), None
            except GeobindError as exc:
                violations.append({"input": input_id, "violation": type(exc).__name__})
                return input_id, None, None

        if kind == "geometryGeoJson":
            if not isinstance(value, dict):
                raise _ApiError(
                    400, "MalformedBody", f"input {input_id!r}: geometryGeoJson must be an object"
                )
            try:
                collection = parse_interchange(value)
            except GeobindError as exc:
                raise _ApiError(400, "MalformedBody", f"input {input_id!r}: {exc}") from None
            if len(collection.features) != 1:
                raise _ApiError(
                    422,
                    "AmbiguousGeometry",
                    f"input {input_id!r}: need exactly one geometry, "
                    f"got {len(collection.features)} features",
                )
            payload = serialize_geometry(collection.features[0].geometry)
            return input_id, InlineComplex(payload, "text/xml"), None

        if kind == "bbox":
            if (
                not isinstance(value, list)
                or len(value) != 4
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
            ):
                raise _ApiError(
                    400,
                    "MalformedBody",
                    f"input {input_id!r}: bbox must be [minx, miny, maxx, maxy]",
                )
            try:
                box = BBox(*(float(v) for v in value))
            except GeobindError as exc:
                raise _ApiError(400, "MalformedBody", f"input {input_id!r}: {exc}") from None
            return input_id, InlineBBox(box), None

        # reference
        if not isinstance(value, dict) or not isinstance(value.get("href"), str):
            raise _ApiError(
                400, "MalformedBody", f"input {input_id!r}: reference needs an href string"
            )
        href = value["href"]
        fetch = value.get("fetchMode", "sendReference")
        if fetch == "sendReference":
            try:
                return input_id, Reference(href, mime_type="text/xml"), FetchMode.SEND_REFERENCE
            except GeobindError as exc:
                raise _ApiError(400, "MalformedBody", f"input {input_id!r}: {exc}") from None
        if fetch == "fetchClientSide":
            self._checked_upstream(href)
            try:
                return input_id, wfs.resolve_href(href, self.upstream), None
            except AmbiguousGeometry as exc:
                raise _ApiError(422, "AmbiguousGeometry", f"input {input_id!r}: {exc}") from None
            except GeobindError as exc:
                raise _upstream_fault(exc) from None
        raise _ApiError(
            400,
            "MalformedBody",
            f"input {input_id!r}: fetchMode must be sendReference or fetchClientSide",
        )

    def _output_json(self, out_id: str, envelope) -> dict:
        entry = {"id": out_id}
        if isinstance(envelope, InlineLiteral):
            entry["literal"] = envelope.value
        elif isinstance(envelope, InlineBBox):
            box = envelope.bbox
            entry["bbox"] = [box.min_x, box.min_y, box.max_x, box.max_y]
        elif isinstance(envelope, Reference):
            entry["reference"] = {"href": envelope.href}
        elif isinstance(envelope, InlineComplex):
            geojson = None
            if envelope.encoding is None and _XML_MIME.search(envelope.mime_type):
                geojson = _payload_geojson(envelope.payload)
            if geojson is not None:
                entry["geojson"] = geojson
            else:
                entry["rawBase64"] = base64.b64encode(envelope.payload).decode("ascii")
                entry["mime"] = envelope.mime_type
        return entry

    # -- WFS endpoints --

    def _wfs_layers(self, query: dict) -> Response:
        url = self._checked_upstream(self._required_param(query, "url", "MissingUrl"))
        joiner = "&" if "?" in url else "?"
        capabilities_url = f"{url}{joiner}service=WFS&version=1.1.0&request=GetCapabilities"
        try:
            body = client.checked_body(self.upstream(Request("GET", capabilities_url)))
            layers = wfs.list_layers(body)
        except GeobindError as exc:
            raise _upstream_fault(exc) from None
        return _ok([{"name": layer.name, "title": layer.title} for layer in layers])

    def _wfs_features(self, request: Request) -> Response:
        body = _json_body(request)
        url = self._checked_upstream(_required_field(body, "url"))
        type_name = _required_field(body, "typeName")

        max_features = body.get("maxFeatures")
        if max_features is not None and (
            isinstance(max_features, bool) or not isinstance(max_features, int)
        ):
            raise _ApiError(400, "MalformedBody", "maxFeatures must be an integer")

        feature_ids = body.get("featureIds") or []
        if not isinstance(feature_ids, list) or not all(
            isinstance(f, str) and f for f in feature_ids
        ):
            raise _ApiError(400, "MalformedBody", "featureIds must be a list of ids")

        raw_filters = body.get("attributeFilters") or []
        if not isinstance(raw_filters, list):
            raise _ApiError(400, "MalformedBody", "attributeFilters must be a list")
        filters = []
        for clause in raw_filters:
            if (
                not isinstance(clause, dict)
                or not isinstance(clause.get("property"), str)
                or not isinstance(clause.get("value"), str)
            ):
                raise _ApiError(
                    400, "MalformedBody", "each attribute filter needs property and value strings"
                )
            filters.append((clause["property"], clause["value"]))

        try:
            query = wfs.WfsQuery(
                service_url=url,
                type_name=type_name,
                max_features=max_features,
                feature_ids=tuple(feature_ids),
                attribute_filters=tuple(filters),
            )
        except (ValueError, GeobindError) as exc:
            raise _ApiError(400, "MalformedBody", str(exc)) from None
        try:
            collection = wfs.fetch_features(query, self.upstream)
        except ConflictingFilters as exc:
            raise _ApiError(422, "ConflictingFilters", str(exc)) from None
        except GeobindError as exc:
            raise _upstream_fault(exc) from None
        return _ok(collection_to_geojson(collection))

    # -- the rest --

    def _defaults(self) -> Response:
        return _ok(
            {
                "defaultEndpoints": [
                    {"name": name, "url": url} for name, url in self.config.default_endpoints
                ]
            }
        )

    def _static(self, path: str) -> Response:
        if self.config.static_dir is None:
            if path == "/":
                return Response(200, {"Content-Type": "text/html; charset=utf-8"}, _FALLBACK_PAGE)
            raise _ApiError(404, "NotFound", f"no such path: {path}")
        root = Path(self.config.static_dir).resolve()
        candidate = (root / path.lstrip("/")).resolve()
        if candidate != root and root not in candidate.parents:
            raise _ApiError(404, "NotFound", f"no such path: {path}")
        if candidate.is_dir():
            candidate = candidate / "index.html"
        if not candidate.is_file():
            raise _ApiError(404, "NotFound", f"no such path: {path}")
        mime = mimetypes.guess_type(candidate.name)[0] or "application/octet-stream"
        return Response(200, {"Content-Type": mime}, candidate.read_bytes())


def _payload_geojson(payload: bytes) -> Optional[dict]:
    """GeoJSON for an XML payload, whether it holds a geometry or a collection."""
    try:
        return geometry_to_geojson(parse_geometry(payload))
    except GeobindError:
        pass
    try:
        return collection_to_geojson(parse_feature_collection(payload))
    except GeobindError:
        return None


# --- hosting -----------------------------------------------------------------


@dataclass
class BridgeServer:
    """A running bridge; stop() is idempotent and also the context exit."""

    url: str
    server: HandlerServer
    thread: threading.Thread
    _stopped: bool = field(default=False, repr=False)

    def stop(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)

    close = stop

    def __enter__(self) -> "BridgeServer":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def start_bridge(
    config: Optional[BridgeConfig] = None, upstream: Optional[Transport] = None
) -> BridgeServer:
    """Serve a BridgeService on its configured address; port 0 picks a free one."""
    config = config or BridgeConfig()
    service = BridgeService(config, upstream=upstream)
    host, port = split_listen_address(config.listen_address)
    server, thread = serve_handler(service.handle, port, host=host)
    bound_host, bound_port = server.server_address[:2]
    return BridgeServer(f"http://{bound_host}:{bound_port}/", server, thread)
