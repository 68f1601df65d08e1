"""Command-line front end: discover, describe, execute, fetch, and serve.

Scripted counterpart to the browser UI — the same client stack driven by
flags instead of forms.  Results go to standard output, diagnostics to the
error stream, and every failure class has a fixed exit code so shell
pipelines can branch on what went wrong:

    2  cannot reach the service (or cannot even start: config, ports)
    3  the remote service reported an exception
    4  the inputs do not satisfy the process contract
    5  a local file could not be read or written
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover — 3.10 fallback
    import tomli as tomllib

from . import client, wfs
from .bridge import (
    BRIDGE_CONFIG_KEYS,
    endpoint_pairs_from_config,
    load_bridge_config,
    start_bridge,
)
from .errors import (
    BindingViolations,
    ConfigError,
    GeobindError,
    PortInUse,
    ServiceReportedException,
    TransportError,
    UnknownOutput,
)
from .gml import (
    collection_to_geojson,
    geometry_to_geojson,
    parse_feature_collection,
    parse_geometry,
    parse_interchange,
    serialize_geometry,
)
from .mock import MockConfig, start_mock_stack
from .model import (
    FetchMode,
    InlineComplex,
    InlineLiteral,
    Kind,
    Reference,
    ServiceEndpoint,
    begin_session,
    bind_input,
    build_execute,
    load_capabilities,
    select_process,
    set_fetch_mode,
    validate_bindings,
)
from .transport import HttpTransport

CONFIG_ENV = "GEOBIND_CONFIG"
CONFIG_BASENAME = "geobind.toml"

EXIT_OK = 0
EXIT_TRANSPORT = 2
EXIT_REMOTE = 3
EXIT_VALIDATION = 4
EXIT_FILE = 5


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class CliConfig:
    default_endpoints: Tuple[Tuple[str, str], ...] = ()
    output_format: str = "geojson"

    def __post_init__(self):
        names = [name for name, _ in self.default_endpoints]
        if len(set(names)) != len(names):
            raise ConfigError("default endpoint names must be unique")
        if self.output_format not in ("gml", "geojson"):
            raise ConfigError(f"output_format must be gml or geojson, got {self.output_format!r}")

    def endpoint(self, name: str) -> Optional[str]:
        for candidate, url in self.default_endpoints:
            if candidate == name:
                return url
        return None


def find_config_path(flag: Optional[str]) -> Optional[str]:
    """--config flag, then GEOBIND_CONFIG, then ./geobind.toml if present."""
    if flag:
        return flag
    from_env = os.environ.get(CONFIG_ENV)
    if from_env:
        return from_env
    if Path(CONFIG_BASENAME).is_file():
        return CONFIG_BASENAME
    return None


def load_cli_config(path: Optional[str]) -> CliConfig:
    if path is None:
        return CliConfig()
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        table = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None

    # one file configures both this tool and the bridge; only keys neither
    # of them owns are typos worth stopping for
    unknown = sorted(set(table) - {"default_endpoints", "output_format"} - BRIDGE_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")

    kwargs = {}
    endpoints = table.get("default_endpoints")
    if endpoints is not None:
        kwargs["default_endpoints"] = endpoint_pairs_from_config(endpoints, path)
    output_format = table.get("output_format")
    if output_format is not None:
        if not isinstance(output_format, str):
            raise ConfigError(f"{path}: output_format must be a string")
        kwargs["output_format"] = output_format
    return CliConfig(**kwargs)


def resolve_target(target: str, config: CliConfig) -> str:
    if not target.startswith("@"):
        return target
    url = config.endpoint(target[1:])
    if url is None:
        raise ConfigError(f"no configured endpoint named {target[1:]!r}")
    return url


# --- small shared pieces ------------------------------------------------------


def _fail(message: str) -> None:
    print(message, file=sys.stderr)


def _remote_message(info) -> str:
    message = f"remote error {info.code}"
    if info.messages:
        message += f": {info.messages[0]}"
    return message


class _InputProblem(Exception):
    """A named input cannot be bound; rendered as 'Code: input' like a violation."""

    def __init__(self, code: str, input_id: str):
        super().__init__(f"{code}: {input_id}")
        self.code = code
        self.input_id = input_id


def _format_for(path: Optional[str], override: Optional[str], config: CliConfig) -> str:
    if override:
        return override
    if path:
        suffix = Path(path).suffix.lower()
        if suffix in (".gml", ".xml"):
            return "gml"
        if suffix in (".geojson", ".json"):
            return "geojson"
    return config.output_format


def _payload_to_geojson(payload: bytes) -> dict:
    try:
        return geometry_to_geojson(parse_geometry(payload))
    except GeobindError:
        return collection_to_geojson(parse_feature_collection(payload))


def _geometry_payload(raw: bytes, fmt: str, origin: str) -> bytes:
    """File content -> GML geometry bytes ready to bind."""
    if fmt == "gml":
        return raw
    collection = parse_interchange(raw)
    if len(collection.features) != 1:
        raise GeobindError(
            f"{origin}: need exactly one geometry, got {len(collection.features)} features"
        )
    return serialize_geometry(collection.features[0].geometry)


# --- discover ------------------------------------------------------------------


def cmd_discover(args) -> int:
    config = load_cli_config(find_config_path(args.config))
    url = resolve_target(args.target, config)
    endpoint, briefs = client.fetch_capabilities(url, HttpTransport())
    print(endpoint.title)
    if endpoint.abstract:
        print(endpoint.abstract)
    print(f"WPS {endpoint.wps_version}")
    print(f"{len(briefs)} processes")
    for brief in briefs:
        print(f"{brief.identifier}\t{brief.title}")
    return EXIT_OK


# --- describe ------------------------------------------------------------------


def _descriptor_detail(descriptor) -> str:
    if descriptor.kind is Kind.LITERAL:
        return descriptor.literal_datatype
    if descriptor.kind is Kind.COMPLEX and descriptor.formats:
        return descriptor.formats[0].mime_type
    return "-"


def cmd_describe(args) -> int:
    config = load_cli_config(find_config_path(args.config))
    url = resolve_target(args.target, config)
    description = client.fetch_description(url, args.process, HttpTransport())
    if args.json:
        print(client.canonical_json(client.description_to_json(description)))
        return EXIT_OK

    brief = description.brief
    print(f"{brief.identifier}: {brief.title}")
    if brief.abstract:
        print(brief.abstract)
    print("inputs:")
    for d in description.inputs:
        occurs = f"{d.min_occurs}..{d.max_occurs}"
        print(f"  {d.identifier:<12} {d.kind.value:<12} {_descriptor_detail(d):<12} {occurs}")
    print("outputs:")
    for d in description.outputs:
        print(f"  {d.identifier:<12} {d.kind.value:<12} {_descriptor_detail(d)}")
    return EXIT_OK


# --- execute ---------------------------------------------------------------------


def _parse_pair(text: str, flag: str) -> Tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"{flag} expects id=value, got {text!r}")
    return key, value


def _parse_wfs_spec(input_id: str, spec: str) -> wfs.WfsQuery:
    parts = spec.split(",")
    if len(parts) < 2:
        raise ConfigError(f"--wfs {input_id} expects url,typeName[,option=..], got {spec!r}")
    url, type_name = parts[0], parts[1]
    feature_ids: List[str] = []
    filters: List[Tuple[str, str]] = []
    max_features = None
    for option in parts[2:]:
        key, sep, value = option.partition("=")
        if not sep:
            raise ConfigError(f"--wfs {input_id}: option {option!r} is not key=value")
        if key == "featureId":
            feature_ids.append(value)
        elif key == "max":
            try:
                max_features = int(value)
            except ValueError:
                raise ConfigError(f"--wfs {input_id}: max must be an integer") from None
        elif key == "attr":
            name, sep, wanted = value.partition("=")
            if not sep:
                raise ConfigError(f"--wfs {input_id}: attr expects attr=key=value")
            filters.append((name, wanted))
        else:
            raise ConfigError(f"--wfs {input_id}: unknown option {key!r}")
    try:
        return wfs.WfsQuery(
            service_url=url,
            type_name=type_name,
            max_features=max_features,
            feature_ids=tuple(feature_ids),
            attribute_filters=tuple(filters),
        )
    except ValueError as exc:
        raise ConfigError(f"--wfs {input_id}: {exc}") from None


def _literal_envelope(description, input_id: str, value: str) -> InlineLiteral:
    descriptor = description.input(input_id)
    datatype = (
        descriptor.literal_datatype
        if descriptor is not None and descriptor.kind is Kind.LITERAL
        else "string"
    )
    return InlineLiteral(value, datatype)


def _collect_bindings(args, description, config, transport):
    """Yield (input_id, envelope, fetch_mode) for every flag-specified input."""
    fetch_here = set(args.fetch_client_side or ())
    bindings = []

    for text in args.complex or ():
        input_id, value = _parse_pair(text, "--complex")
        if not value.startswith("@"):
            raise ConfigError(f"--complex {input_id} expects @file, got {value!r}")
        path = value[1:]
        raw = Path(path).read_bytes()  # OSError -> exit 5 in main
        fmt = _format_for(path, args.format, config)
        try:
            payload = _geometry_payload(raw, fmt, path)
        except GeobindError as exc:
            raise _InputProblem(type(exc).__name__, input_id) from exc
        bindings.append((input_id, InlineComplex(payload, "text/xml"), None))

    for text in args.literal or ():
        input_id, value = _parse_pair(text, "--literal")
        try:
            bindings.append((input_id, _literal_envelope(description, input_id, value), None))
        except GeobindError as exc:
            raise _InputProblem(type(exc).__name__, input_id) from exc

    for text in args.reference or ():
        input_id, href = _parse_pair(text, "--reference")
        if input_id in fetch_here:
            fetch_here.discard(input_id)
            try:
                bindings.append((input_id, wfs.resolve_href(href, transport), None))
            except GeobindError as exc:
                raise _InputProblem(type(exc).__name__, input_id) from exc
        else:
            bindings.append(
                (input_id, Reference(href, mime_type="text/xml"), FetchMode.SEND_REFERENCE)
            )

    for text in args.wfs or ():
        input_id, spec = _parse_pair(text, "--wfs")
        query = _parse_wfs_spec(input_id, spec)
        if input_id in fetch_here:
            fetch_here.discard(input_id)
            try:
                envelope = wfs.resolve_reference(query, transport, geometry_only=True)
            except GeobindError as exc:
                raise _InputProblem(type(exc).__name__, input_id) from exc
            bindings.append((input_id, envelope, None))
        else:
            bindings.append((input_id, wfs.as_reference(query), FetchMode.SEND_REFERENCE))

    for input_id in sorted(fetch_here):
        raise _InputProblem("FetchClientSideWithoutReference", input_id)
    return bindings


def _write_complex(envelope: InlineComplex, path: Optional[str], args, config) -> None:
    fmt = _format_for(path, args.format, config)
    if "xml" not in envelope.mime_type.lower():
        data = envelope.payload  # opaque payloads pass through untouched
    elif fmt == "gml":
        data = envelope.payload
    else:
        data = (json.dumps(_payload_to_geojson(envelope.payload), indent=2) + "\n").encode()
    if path is None:
        sys.stdout.write(data.decode("utf-8", errors="replace"))
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")
    else:
        Path(path).write_bytes(data)  # OSError -> exit 5 in main


def cmd_execute(args) -> int:
    config = load_cli_config(find_config_path(args.config))
    url = resolve_target(args.target, config)
    transport = HttpTransport()

    description = client.fetch_description(url, args.process, transport)
    session = select_process(
        load_capabilities(begin_session(url), ServiceEndpoint(url), (description.brief,)),
        description,
    )
    for input_id, envelope, mode in _collect_bindings(args, description, config, transport):
        try:
            session = bind_input(session, input_id, envelope)
        except GeobindError as exc:
            raise _InputProblem(type(exc).__name__, input_id) from exc
        if mode is not None:
            session = set_fetch_mode(session, input_id, mode)

    violations = validate_bindings(session)
    if violations:
        raise BindingViolations(violations)
    build_execute(session, raw_single_output=args.raw)  # surface UnknownOutput before sending

    session, result = client.send_execute(session, transport, raw_output=args.raw)
    if result.status != "Succeeded":
        _fail(_remote_message(result.failure))
        return EXIT_REMOTE

    out_path = args.out
    for out_id, envelope in result.outputs:
        if isinstance(envelope, InlineLiteral):
            print(f"{out_id}\t{envelope.value}")
        elif isinstance(envelope, InlineComplex):
            _write_complex(envelope, out_path, args, config)
            out_path = None  # only the first complex output lands in the file
        elif isinstance(envelope, Reference):
            print(f"{out_id}\t{envelope.href}")
        else:  # InlineBBox
            box = envelope.bbox
            print(f"{out_id}\t{box.min_x} {box.min_y} {box.max_x} {box.max_y}")
    return EXIT_OK


# --- serve -------------------------------------------------------------------------


def _install_shutdown_handler(stop: threading.Event) -> None:
    for signum in (signal.SIGINT, signal.SIGTERM):
        signal.signal(signum, lambda *_: stop.set())


def cmd_serve(args) -> int:
    config_path = find_config_path(args.config)
    want_mock = args.mock
    want_bridge = args.bridge or not args.mock  # plain `serve` means the bridge

    running = []
    stop = threading.Event()
    # take over the interrupt signal before the first URL is printed: a caller
    # may shut us down the moment it has read the addresses it asked for
    _install_shutdown_handler(stop)
    try:
        mock_urls = None
        if want_mock:
            wps_url, wfs_url, stack = start_mock_stack(
                MockConfig(wps_port=args.wps_port, wfs_port=args.wfs_port)
            )
            running.append(stack.stop)
            mock_urls = (wps_url, wfs_url)
            print(wps_url, flush=True)
            print(wfs_url, flush=True)

        if want_bridge:
            bridge_config = load_bridge_config(config_path)
            if mock_urls is not None:
                endpoints = tuple(
                    (name, url) for name, url in bridge_config.default_endpoints if name != "mock"
                ) + (("mock", mock_urls[0]),)
                bridge_config = replace(bridge_config, default_endpoints=endpoints)
            server = start_bridge(bridge_config)
            running.append(server.stop)
            print(server.url, flush=True)

        stop.wait()
        return EXIT_OK
    except KeyboardInterrupt:  # an interrupt that beat the handler installation
        return EXIT_OK
    finally:
        for halt in reversed(running):
            halt()


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geobind",
        description="Discover, describe and execute published geospatial processes.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(sub):
        sub.add_argument("--config", help="config file (else $GEOBIND_CONFIG, else ./geobind.toml)")

    discover = commands.add_parser("discover", help="list a service's processes")
    discover.add_argument("target", help="service URL or @name from the config")
    with_config(discover)
    discover.set_defaults(run=cmd_discover)

    describe = commands.add_parser("describe", help="show a process's inputs and outputs")
    describe.add_argument("target")
    describe.add_argument("process")
    describe.add_argument("--json", action="store_true", help="machine-readable description")
    with_config(describe)
    describe.set_defaults(run=cmd_describe)

    execute = commands.add_parser("execute", help="bind inputs and run a process")
    execute.add_argument("target")
    execute.add_argument("process")
    execute.add_argument("--literal", action="append", metavar="ID=VALUE")
    execute.add_argument("--complex", action="append", metavar="ID=@FILE")
    execute.add_argument("--reference", action="append", metavar="ID=HREF")
    execute.add_argument(
        "--wfs",
        action="append",
        metavar="ID=URL,TYPENAME[,featureId=..][,max=..][,attr=K=V]",
        help="bind a feature query as the input",
    )
    execute.add_argument(
        "--fetch-client-side",
        action="append",
        metavar="ID",
        help="resolve this reference locally and send the data inline",
    )
    execute.add_argument("--raw", metavar="OUTPUT", help="ask for one output as a bare payload")
    execute.add_argument("--out", metavar="PATH", help="write the first complex output here")
    execute.add_argument("--format", choices=("gml", "geojson"), help="override file formats")
    with_config(execute)
    execute.set_defaults(run=cmd_execute)

    serve = commands.add_parser("serve", help="run the bridge and/or the offline mock stack")
    serve.add_argument("--mock", action="store_true", help="serve the offline WPS+WFS pair")
    serve.add_argument("--bridge", action="store_true", help="serve the JSON bridge")
    serve.add_argument("--wps-port", type=int, default=0)
    serve.add_argument("--wfs-port", type=int, default=0)
    with_config(serve)
    serve.set_defaults(run=cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ConfigError, PortInUse) as exc:
        _fail(str(exc))
        return EXIT_TRANSPORT
    except TransportError as exc:
        _fail(str(exc))
        return EXIT_TRANSPORT
    except ServiceReportedException as exc:
        _fail(_remote_message(exc.info))
        return EXIT_REMOTE
    except BindingViolations as exc:
        for violation in exc.violations:
            _fail(f"{violation.code}: {violation.input_id}")
        return EXIT_VALIDATION
    except (_InputProblem, UnknownOutput) as exc:
        _fail(str(exc))
        return EXIT_VALIDATION
    except OSError as exc:
        _fail(str(exc))
        return EXIT_FILE
    except GeobindError as exc:
        _fail(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
