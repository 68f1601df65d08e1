"""Bridge contract suite: JSON endpoints, error mapping, config, statelessness.

Endpoint behavior is exercised in-process (the handler is a plain function);
a final group goes over real loopback HTTP to check the service stays
stateless under concurrent, shuffled replay.
"""

import base64
import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from urllib.parse import quote

import pytest

from geobind import client
from geobind.bridge import (
    CONFIG_ENV,
    BridgeConfig,
    BridgeService,
    _DescribeCache,
    bridge_config_from_table,
    load_bridge_config,
    split_listen_address,
    start_bridge,
)
from geobind.errors import ConfigError, PortInUse
from geobind.gml import LineString, geometry_to_geojson, parse_geometry, serialize_geometry
from geobind.kernel import buffer as kernel_buffer
from geobind.mock import MockConfig, fixture_bytes, parse_execute_request, start_mock_stack
from geobind.mock.wfs import default_dataset, wfs_handle
from geobind.mock.wps import WpsService
from geobind.model import (
    InlineComplex,
    InlineLiteral,
    ServiceEndpoint,
    begin_session,
    bind_input,
    build_execute,
    load_capabilities,
    select_process,
)
from geobind.transport import HttpTransport, InProcessTransport, Request, Response

WPS = "http://127.0.0.1/wps"
WFS = "http://127.0.0.1/wfs"
LINE = LineString(((0.0, 0.0), (10.0, 0.0)))
LINE_GEOJSON = geometry_to_geojson(LINE)
ROAD_REF = WFS + "?service=WFS&version=1.1.0&request=GetFeature&typeName=roads&featureId=road.1"
ALL_ROADS_REF = WFS + "?service=WFS&version=1.1.0&request=GetFeature&typeName=roads"


def make_upstream():
    wps = WpsService(reference_transport=InProcessTransport({WFS: wfs_handle}))
    return InProcessTransport({WPS: wps.handle, WFS: wfs_handle})


@pytest.fixture()
def service():
    return BridgeService(upstream=make_upstream())


def get(service, path):
    return service.handle(Request("GET", "http://bridge" + path))


def post(service, path, payload):
    return service.handle(
        Request("POST", "http://bridge" + path, body=json.dumps(payload).encode())
    )


def ok_of(response):
    assert response.status == 200, response.body
    document = json.loads(response.body)
    assert set(document) == {"ok"}
    return document["ok"]


def error_of(response, status):
    assert response.status == status, (response.status, response.body)
    document = json.loads(response.body)
    assert set(document) == {"error"}
    error = document["error"]
    assert error["code"] and "message" in error
    return error


def execute_body(inputs, process="Buffer", **extra):
    return {"url": WPS, "process": process, "inputs": inputs, **extra}


CAPS_PATH = "/api/capabilities?url=" + quote(WPS, safe="")
BUFFER_PATH = "/api/process?url=" + quote(WPS, safe="") + "&id=Buffer"


# --- capabilities ------------------------------------------------------------


class TestCapabilities:
    def test_mock_service_summary(self, service):
        summary = ok_of(get(service, CAPS_PATH))
        assert summary["processCount"] == 3
        assert [p["id"] for p in summary["processes"]] == ["Buffer", "Centroid", "Envelope"]
        assert summary["title"] == "Mock Analysis Service"
        assert summary["version"] == "1.0.0"
        assert all(p["title"] and p["abstract"] for p in summary["processes"])

    def test_missing_url_parameter(self, service):
        assert error_of(get(service, "/api/capabilities"), 400)["code"] == "MissingUrl"

    def test_unreachable_upstream(self):
        service = BridgeService(upstream=InProcessTransport({}))
        error = error_of(get(service, CAPS_PATH), 502)
        assert error["code"] == "UpstreamUnreachable"

    def test_unsupported_version(self):
        # the root attribute is double-quoted; the XML declaration is not touched
        doctored = fixture_bytes("wps_capabilities.xml").replace(b'version="1.0.0"', b'version="2.0.0"')
        upstream = InProcessTransport(
            {WPS: lambda r: Response(200, {"Content-Type": "text/xml"}, doctored)}
        )
        error = error_of(get(BridgeService(upstream=upstream), CAPS_PATH), 422)
        assert error["code"] == "UnsupportedVersion"

    def test_undecodable_upstream_body(self):
        upstream = InProcessTransport(
            {WPS: lambda r: Response(200, {"Content-Type": "text/xml"}, b"<broken")}
        )
        error = error_of(get(BridgeService(upstream=upstream), CAPS_PATH), 502)
        assert error["code"] == "UpstreamUnreachable"

    def test_disallowed_upstream_host(self, service):
        path = "/api/capabilities?url=" + quote("http://example.com/wps", safe="")
        assert error_of(get(service, path), 403)["code"] == "DisallowedUpstream"

    def test_wildcard_opens_the_allow_list(self):
        url = "http://example.com/wps"
        upstream = InProcessTransport(
            {url: lambda r: Response(200, {"Content-Type": "text/xml"}, fixture_bytes("wps_capabilities.xml"))}
        )
        service = BridgeService(BridgeConfig(allowed_upstreams=("*",)), upstream=upstream)
        summary = ok_of(get(service, "/api/capabilities?url=" + quote(url, safe="")))
        assert summary["processCount"] == 3

    def test_garbage_url(self, service):
        path = "/api/capabilities?url=" + quote("not a url", safe="")
        assert error_of(get(service, path), 400)["code"] == "MalformedUrl"


# --- process description ------------------------------------------------------


class TestProcess:
    def test_buffer_description(self, service):
        description = ok_of(get(service, BUFFER_PATH))
        assert description["id"] == "Buffer"
        geometry, distance = description["inputs"]
        assert (geometry["id"], geometry["kind"]) == ("geometry", "Complex")
        assert geometry["formats"][0]["mimeType"] == "text/xml"
        assert (distance["id"], distance["kind"], distance["datatype"]) == (
            "distance",
            "Literal",
            "double",
        )
        assert description["outputs"][0]["id"] == "result"

    def test_body_is_the_shared_serializer_shape(self, service):
        description = ok_of(get(service, BUFFER_PATH))
        fetched = client.fetch_description(WPS, "Buffer", make_upstream())
        assert description == client.description_to_json(fetched)

    def test_unknown_process_is_404_with_remote_code(self, service):
        path = "/api/process?url=" + quote(WPS, safe="") + "&id=Reproject"
        error = error_of(get(service, path), 404)
        assert error["code"] == "UnknownProcess"
        assert error["remote"]["code"] == "InvalidParameterValue"
        assert error["remote"]["locator"] == "identifier"

    def test_missing_id_parameter(self, service):
        path = "/api/process?url=" + quote(WPS, safe="")
        assert error_of(get(service, path), 400)["code"] == "MissingId"


# --- execute -----------------------------------------------------------------


class TestExecute:
    def test_buffer_matches_a_direct_kernel_round_trip(self, service):
        result = ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        assert result["status"] == "succeeded"
        (output,) = result["outputs"]
        assert output["id"] == "result"
        expected = geometry_to_geojson(
            parse_geometry(serialize_geometry(kernel_buffer(LINE, 1.0)))
        )
        assert output["geojson"] == expected

    def test_missing_required_input(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body([{"id": "geometry", "geometryGeoJson": LINE_GEOJSON}]),
        )
        error = error_of(response, 422)
        assert error["code"] == "ValidationFailed"
        assert error["violations"] == [{"input": "distance", "violation": "MissingRequired"}]

    def test_reference_and_inline_agree(self, service):
        road = default_dataset().features[0]
        inline = ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "geometryGeoJson": geometry_to_geojson(road.geometry)},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        by_reference = ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "reference": {"href": ROAD_REF, "fetchMode": "sendReference"}},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        fetched_here = ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "reference": {"href": ROAD_REF, "fetchMode": "fetchClientSide"}},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        assert inline["outputs"] == by_reference["outputs"] == fetched_here["outputs"]

    def test_raw_output_passes_through_untouched(self, service):
        result = ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [{"id": "geometry", "geometryGeoJson": LINE_GEOJSON}],
                    process="Centroid",
                    raw="result",
                ),
            )
        )
        (output,) = result["outputs"]
        assert output["mime"] == "text/plain"
        assert base64.b64decode(output["rawBase64"]) == b"5 0"

    def test_remote_fault_keeps_its_code(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                    {"id": "distance", "literal": -2},
                ]
            ),
        )
        error = error_of(response, 502)
        assert error["code"] == "RemoteException"
        assert error["remote"]["code"] == "InvalidParameterValue"
        assert error["remote"]["locator"] == "distance"

    def test_unknown_process_via_execute(self, service):
        response = post(service, "/api/execute", execute_body([], process="Reproject"))
        assert error_of(response, 404)["code"] == "UnknownProcess"

    def test_literal_that_does_not_parse(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                    {"id": "distance", "literal": "wide"},
                ]
            ),
        )
        error = error_of(response, 422)
        assert {"input": "distance", "violation": "LiteralParseError"} in error["violations"]

    def test_unknown_input_and_kind_mismatch_are_violations(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "bbox": [0, 0, 1, 1]},
                    {"id": "speed", "literal": "3"},
                    {"id": "distance", "literal": 1.0},
                ]
            ),
        )
        error = error_of(response, 422)
        assert error["violations"] == [
            {"input": "geometry", "violation": "KindMismatch"},
            {"input": "speed", "violation": "UnknownInput"},
        ]

    def test_unknown_raw_output_name(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                    {"id": "distance", "literal": 1.0},
                ],
                raw="nope",
            ),
        )
        assert error_of(response, 422)["code"] == "UnknownOutput"

    def test_ambiguous_inline_geometry(self, service):
        two = {
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature", "id": "a", "geometry": LINE_GEOJSON, "properties": {}},
                {"type": "Feature", "id": "b", "geometry": LINE_GEOJSON, "properties": {}},
            ],
        }
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "geometryGeoJson": two},
                    {"id": "distance", "literal": 1.0},
                ]
            ),
        )
        assert error_of(response, 422)["code"] == "AmbiguousGeometry"

    def test_ambiguous_client_side_fetch(self, service):
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "reference": {"href": ALL_ROADS_REF, "fetchMode": "fetchClientSide"}},
                    {"id": "distance", "literal": 1.0},
                ]
            ),
        )
        assert error_of(response, 422)["code"] == "AmbiguousGeometry"

    def test_client_side_fetch_respects_the_allow_list(self, service):
        href = "http://example.com/wfs?request=GetFeature"
        response = post(
            service,
            "/api/execute",
            execute_body(
                [
                    {"id": "geometry", "reference": {"href": href, "fetchMode": "fetchClientSide"}},
                    {"id": "distance", "literal": 1.0},
                ]
            ),
        )
        assert error_of(response, 403)["code"] == "DisallowedUpstream"

    @pytest.mark.parametrize(
        "body",
        [
            [],  # not even an object
            {"process": "Buffer", "inputs": []},  # url missing
            {"url": WPS, "inputs": []},  # process missing
            {"url": WPS, "process": "Buffer", "inputs": {}},  # inputs not a list
            {"url": WPS, "process": "Buffer", "inputs": [], "raw": 7},
            {"url": WPS, "process": "Buffer", "inputs": ["distance"]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "distance"}]},
            {"url": WPS, "process": "Buffer",
             "inputs": [{"id": "distance", "literal": "1", "bbox": [0, 0, 1, 1]}]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "distance", "literal": [1]}]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "geometry", "geometryGeoJson": 4}]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "geometry", "bbox": [0, 1, 2]}]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "geometry", "bbox": [0, 1, 2, True]}]},
            {"url": WPS, "process": "Buffer", "inputs": [{"id": "geometry", "reference": {}}]},
            {"url": WPS, "process": "Buffer",
             "inputs": [{"id": "geometry", "reference": {"href": "/relative"}}]},
            {"url": WPS, "process": "Buffer",
             "inputs": [{"id": "geometry", "reference": {"href": ROAD_REF, "fetchMode": "mail"}}]},
        ],
    )
    def test_malformed_bodies(self, service, body):
        response = post(service, "/api/execute", body)
        assert error_of(response, 400)["code"] == "MalformedBody"

    def test_unparseable_json_body(self, service):
        response = service.handle(Request("POST", "http://bridge/api/execute", body=b"{nope"))
        assert error_of(response, 400)["code"] == "MalformedBody"

    def test_missing_body(self, service):
        response = service.handle(Request("POST", "http://bridge/api/execute"))
        assert error_of(response, 400)["code"] == "MalformedBody"

    def test_transparency_with_a_directly_built_request(self):
        recorded = []
        inner = make_upstream()

        def recording(request):
            recorded.append(request)
            return inner(request)

        service = BridgeService(upstream=recording)
        ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        posts = [r for r in recorded if r.method == "POST"]
        assert len(posts) == 1
        sent = parse_execute_request(posts[0].body)

        description = client.fetch_description(WPS, "Buffer", make_upstream())
        session = select_process(
            load_capabilities(begin_session(WPS), ServiceEndpoint(WPS), (description.brief,)),
            description,
        )
        session = bind_input(
            session, "geometry", InlineComplex(serialize_geometry(LINE), "text/xml")
        )
        session = bind_input(session, "distance", InlineLiteral("1", "double"))
        assert sent == build_execute(session)


# --- WFS endpoints -------------------------------------------------------------


class TestWfsEndpoints:
    def test_layer_listing(self, service):
        path = "/api/wfs/layers?url=" + quote(WFS, safe="")
        assert ok_of(get(service, path)) == [{"name": "roads", "title": "Road centerlines"}]

    def test_layers_need_a_url(self, service):
        assert error_of(get(service, "/api/wfs/layers"), 400)["code"] == "MissingUrl"

    def test_features_by_id(self, service):
        collection = ok_of(
            post(service, "/api/wfs/features", {"url": WFS, "typeName": "roads", "featureIds": ["road.1"]})
        )
        assert collection["type"] == "FeatureCollection"
        assert [f["id"] for f in collection["features"]] == ["road.1"]

    def test_features_by_attribute(self, service):
        collection = ok_of(
            post(
                service,
                "/api/wfs/features",
                {"url": WFS, "typeName": "roads",
                 "attributeFilters": [{"property": "name", "value": "B"}]},
            )
        )
        assert [f["id"] for f in collection["features"]] == ["road.2"]

    def test_feature_truncation(self, service):
        collection = ok_of(
            post(service, "/api/wfs/features", {"url": WFS, "typeName": "roads", "maxFeatures": 2})
        )
        assert len(collection["features"]) == 2

    def test_conflicting_filter_families(self, service):
        response = post(
            service,
            "/api/wfs/features",
            {"url": WFS, "typeName": "roads", "featureIds": ["road.1"],
             "attributeFilters": [{"property": "name", "value": "B"}]},
        )
        assert error_of(response, 422)["code"] == "ConflictingFilters"

    def test_unknown_layer_keeps_remote_locator(self, service):
        response = post(service, "/api/wfs/features", {"url": WFS, "typeName": "rivers"})
        error = error_of(response, 502)
        assert error["code"] == "RemoteException"
        assert error["remote"]["locator"] == "typeName"

    @pytest.mark.parametrize(
        "body",
        [
            {"url": WFS},
            {"url": WFS, "typeName": "roads", "maxFeatures": "two"},
            {"url": WFS, "typeName": "roads", "maxFeatures": 0},
            {"url": WFS, "typeName": "roads", "featureIds": "road.1"},
            {"url": WFS, "typeName": "roads", "attributeFilters": [{"property": "name"}]},
        ],
    )
    def test_malformed_feature_queries(self, service, body):
        assert error_of(post(service, "/api/wfs/features", body), 400)["code"] == "MalformedBody"


# --- routing, defaults, static --------------------------------------------------


class TestRoutingAndStatic:
    def test_defaults_come_from_config(self):
        config = BridgeConfig(default_endpoints=(("mock", WPS), ("other", WFS)))
        service = BridgeService(config, upstream=make_upstream())
        assert ok_of(get(service, "/api/defaults")) == {
            "defaultEndpoints": [
                {"name": "mock", "url": WPS},
                {"name": "other", "url": WFS},
            ]
        }

    def test_wrong_method(self, service):
        response = service.handle(Request("POST", "http://bridge" + CAPS_PATH))
        assert error_of(response, 405)["code"] == "MethodNotAllowed"
        response = service.handle(Request("GET", "http://bridge/api/execute"))
        assert error_of(response, 405)["code"] == "MethodNotAllowed"

    def test_unknown_api_route(self, service):
        assert error_of(get(service, "/api/sessions"), 404)["code"] == "UnknownRoute"

    def test_fallback_page_without_a_ui(self, service):
        response = get(service, "/")
        assert response.status == 200
        assert response.content_type == "text/html"
        assert b"/api/" in response.body
        assert error_of(get(service, "/anything.js"), 404)["code"] == "NotFound"

    def test_static_files(self, tmp_path):
        (tmp_path / "index.html").write_text("<h1>ui</h1>")
        assets = tmp_path / "assets"
        assets.mkdir()
        (assets / "app.js").write_text("console.log(1)")
        (tmp_path.parent / "outside.txt").write_text("not served")

        config = BridgeConfig(static_dir=str(tmp_path))
        service = BridgeService(config, upstream=make_upstream())

        index = get(service, "/")
        assert (index.status, index.body) == (200, b"<h1>ui</h1>")
        script = get(service, "/assets/app.js")
        assert script.status == 200
        assert "javascript" in script.header("Content-Type")
        assert get(service, "/missing.css").status == 404
        assert get(service, "/../outside.txt").status == 404

    def test_internal_error_backstop(self):
        def explode(request):
            raise RuntimeError("boom")

        response = BridgeService(upstream=explode).handle(
            Request("GET", "http://bridge" + CAPS_PATH)
        )
        assert error_of(response, 500)["code"] == "InternalError"


# --- the describe cache ----------------------------------------------------------


class CountingTransport:
    def __init__(self, inner):
        self.inner = inner
        self.describes = 0

    def __call__(self, request):
        if "DescribeProcess" in request.url:
            self.describes += 1
        return self.inner(request)


class TestDescribeCache:
    def test_execute_reuses_a_fresh_description(self):
        counting = CountingTransport(make_upstream())
        service = BridgeService(upstream=counting)
        ok_of(get(service, BUFFER_PATH))
        ok_of(get(service, BUFFER_PATH))
        ok_of(
            post(
                service,
                "/api/execute",
                execute_body(
                    [
                        {"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                        {"id": "distance", "literal": 1.0},
                    ]
                ),
            )
        )
        assert counting.describes == 1

    def test_zero_ttl_disables_caching(self):
        counting = CountingTransport(make_upstream())
        service = BridgeService(BridgeConfig(describe_cache_seconds=0), upstream=counting)
        ok_of(get(service, BUFFER_PATH))
        ok_of(get(service, BUFFER_PATH))
        assert counting.describes == 2

    def test_entries_expire(self):
        counting = CountingTransport(make_upstream())
        service = BridgeService(BridgeConfig(describe_cache_seconds=0.05), upstream=counting)
        ok_of(get(service, BUFFER_PATH))
        time.sleep(0.08)
        ok_of(get(service, BUFFER_PATH))
        assert counting.describes == 2

    def test_capacity_evicts_the_least_recently_used(self):
        cache = _DescribeCache(ttl=60, capacity=2)
        cache.put(("u", "a"), "A")
        cache.put(("u", "b"), "B")
        assert cache.get(("u", "a")) == "A"  # refreshes recency
        cache.put(("u", "c"), "C")
        assert cache.get(("u", "b")) is None
        assert cache.get(("u", "a")) == "A"
        assert cache.get(("u", "c")) == "C"


# --- configuration ---------------------------------------------------------------


class TestConfig:
    def test_defaults_without_a_file(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV, raising=False)
        assert load_bridge_config() == BridgeConfig()

    def test_full_file(self, tmp_path):
        path = tmp_path / "bridge.toml"
        path.write_text(
            'listen_address = "127.0.0.1:8123"\n'
            'allowed_upstreams = ["127.0.0.1", "wps.example.net"]\n'
            "describe_cache_seconds = 12.5\n"
            'static_dir = "/srv/ui"\n'
            "[[default_endpoints]]\n"
            'name = "mock"\n'
            'url = "http://127.0.0.1:8080/wps"\n'
            "[[default_endpoints]]\n"
            'name = "prod"\n'
            'url = "http://wps.example.net/wps"\n'
        )
        config = load_bridge_config(str(path))
        assert config == BridgeConfig(
            listen_address="127.0.0.1:8123",
            allowed_upstreams=("127.0.0.1", "wps.example.net"),
            describe_cache_seconds=12.5,
            default_endpoints=(
                ("mock", "http://127.0.0.1:8080/wps"),
                ("prod", "http://wps.example.net/wps"),
            ),
            static_dir="/srv/ui",
        )

    def test_environment_variable_names_the_file(self, tmp_path, monkeypatch):
        path = tmp_path / "from_env.toml"
        path.write_text('listen_address = "127.0.0.1:9999"\n')
        monkeypatch.setenv(CONFIG_ENV, str(path))
        assert load_bridge_config().listen_address == "127.0.0.1:9999"

    def test_explicit_path_wins_over_environment(self, tmp_path, monkeypatch):
        env_file = tmp_path / "env.toml"
        env_file.write_text('listen_address = "127.0.0.1:1111"\n')
        arg_file = tmp_path / "arg.toml"
        arg_file.write_text('listen_address = "127.0.0.1:2222"\n')
        monkeypatch.setenv(CONFIG_ENV, str(env_file))
        assert load_bridge_config(str(arg_file)).listen_address == "127.0.0.1:2222"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_bridge_config(str(tmp_path / "nope.toml"))

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("listen_address = \n")
        with pytest.raises(ConfigError):
            load_bridge_config(str(path))

    @pytest.mark.parametrize(
        "table",
        [
            {"listen_port": 80},  # unknown key
            {"listen_address": 8080},
            {"allowed_upstreams": "localhost"},
            {"allowed_upstreams": [1, 2]},
            {"describe_cache_seconds": True},
            {"describe_cache_seconds": "soon"},
            {"describe_cache_seconds": -1},
            {"default_endpoints": {"name": "a", "url": "b"}},
            {"default_endpoints": [{"name": "a"}]},
            {"default_endpoints": [{"name": "a", "url": "u", "extra": "x"}]},
            {"default_endpoints": [{"name": "a", "url": "u"}, {"name": "a", "url": "v"}]},
            {"listen_address": "no-port"},
            {"listen_address": "host:port"},
            {"listen_address": "host:70000"},
        ],
    )
    def test_rejected_tables(self, table):
        with pytest.raises(ConfigError):
            bridge_config_from_table(table)

    def test_listen_address_splitting(self):
        assert split_listen_address("127.0.0.1:0") == ("127.0.0.1", 0)
        assert split_listen_address("[::1]:8080") == ("::1", 8080)


# --- live HTTP: statelessness and hosting ------------------------------------------


@pytest.fixture(scope="module")
def live():
    wps_url, wfs_url, stack = start_mock_stack(MockConfig())
    config = BridgeConfig(default_endpoints=(("mock", wps_url),))
    server = start_bridge(config)
    http = HttpTransport(timeout=10.0)
    try:
        yield {"wps": wps_url, "wfs": wfs_url, "bridge": server.url.rstrip("/"),
               "server": server, "http": http}
    finally:
        server.stop()
        stack.stop()


def live_requests(live):
    bridge_url = live["bridge"]
    wps = quote(live["wps"], safe="")
    wfs = quote(live["wfs"], safe="")

    def post_json(path, payload):
        return Request("POST", bridge_url + path, body=json.dumps(payload).encode())

    return [
        Request("GET", f"{bridge_url}/api/capabilities?url={wps}"),
        Request("GET", f"{bridge_url}/api/process?url={wps}&id=Buffer"),
        Request("GET", f"{bridge_url}/api/process?url={wps}&id=Centroid"),
        post_json(
            "/api/execute",
            {"url": live["wps"], "process": "Buffer",
             "inputs": [{"id": "geometry", "geometryGeoJson": LINE_GEOJSON},
                        {"id": "distance", "literal": 1.0}]},
        ),
        post_json(
            "/api/execute",
            {"url": live["wps"], "process": "Buffer",
             "inputs": [{"id": "geometry", "geometryGeoJson": LINE_GEOJSON}]},
        ),
        Request("GET", f"{bridge_url}/api/wfs/layers?url={wfs}"),
        post_json("/api/wfs/features",
                  {"url": live["wfs"], "typeName": "roads", "featureIds": ["road.1"]}),
        Request("GET", f"{bridge_url}/api/defaults"),
    ]


class TestLiveBridge:
    def test_concurrent_shuffled_replay_is_byte_identical(self, live):
        requests = live_requests(live)
        http = live["http"]
        baseline = [http(r) for r in requests]
        assert {baseline[4].status} == {422}  # the error response replays too

        workload = [(i, requests[i]) for i in range(len(requests)) for _ in range(4)]
        random.Random(7).shuffle(workload)
        with ThreadPoolExecutor(max_workers=8) as pool:
            replayed = list(pool.map(lambda pair: (pair[0], http(pair[1])), workload))
        for index, response in replayed:
            assert response.status == baseline[index].status
            assert response.body == baseline[index].body

    def test_default_endpoints_are_served(self, live):
        response = live["http"](Request("GET", live["bridge"] + "/api/defaults"))
        assert json.loads(response.body)["ok"]["defaultEndpoints"] == [
            {"name": "mock", "url": live["wps"]}
        ]

    def test_fallback_page_over_http(self, live):
        response = live["http"](Request("GET", live["bridge"] + "/"))
        assert response.status == 200
        assert response.content_type == "text/html"

    def test_port_in_use(self, live):
        taken = live["bridge"].rsplit(":", 1)[1]
        with pytest.raises(PortInUse):
            start_bridge(BridgeConfig(listen_address=f"127.0.0.1:{taken}"))

    def test_stop_is_idempotent(self):
        server = start_bridge(BridgeConfig())
        server.stop()
        server.stop()
