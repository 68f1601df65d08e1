"""Command-line behavior: output shapes, exit-code discipline, config discovery.

Commands run in-process (main() is a plain function returning the exit code)
against a live mock stack; the serve subcommand is exercised as a real
subprocess because its contract includes signal handling and port binding.
"""

import json
import signal
import socket
import subprocess
import sys
from urllib.parse import quote

import pytest

from geobind.bridge import BridgeService
from geobind.cli import CliConfig, load_cli_config, main
from geobind.client import canonical_json
from geobind.errors import ConfigError
from geobind.gml import (
    format_coord,
    geometry_to_geojson,
    parse_geometry,
    parse_interchange,
    serialize_geometry,
)
from geobind.kernel import buffer as kernel_buffer, centroid as kernel_centroid
from geobind.mock import MockConfig, start_mock_stack
from geobind.mock.wfs import default_dataset
from geobind.transport import HttpTransport, Request


@pytest.fixture(scope="module")
def live():
    wps_url, wfs_url, stack = start_mock_stack(MockConfig())
    try:
        yield {"wps": wps_url, "wfs": wfs_url}
    finally:
        stack.stop()


@pytest.fixture()
def run(capsys):
    def invoke(*argv):
        code = main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke


ROAD1 = default_dataset().features[0].geometry


@pytest.fixture()
def road_files(tmp_path):
    gml = tmp_path / "road1.gml"
    gml.write_bytes(serialize_geometry(ROAD1))
    geojson = tmp_path / "road1.geojson"
    geojson.write_text(json.dumps(geometry_to_geojson(ROAD1)))
    return {"gml": str(gml), "geojson": str(geojson), "dir": tmp_path}


def expected_buffer_geojson(distance=1.0):
    # what the mock hands back, converted the same way the CLI converts it
    grown = kernel_buffer(ROAD1, distance)
    return geometry_to_geojson(parse_geometry(serialize_geometry(grown)))


# --- discover -----------------------------------------------------------------


class TestDiscover:
    def test_listing(self, live, run):
        code, out, err = run("discover", live["wps"])
        assert (code, err) == (0, "")
        lines = out.splitlines()
        assert lines[0] == "Mock Analysis Service"
        assert "WPS 1.0.0" in lines
        assert "3 processes" in lines
        assert lines[-3:] == ["Buffer\tBuffer", "Centroid\tCentroid", "Envelope\tEnvelope"]

    def test_alias_resolves_through_config(self, live, run, tmp_path):
        config = tmp_path / "geobind.toml"
        config.write_text(f'[[default_endpoints]]\nname = "mock"\nurl = "{live["wps"]}"\n')
        direct = run("discover", live["wps"])
        via_alias = run("discover", "@mock", "--config", str(config))
        assert via_alias == direct

    def test_unknown_alias(self, run, tmp_path):
        config = tmp_path / "geobind.toml"
        config.write_text("default_endpoints = []\n")
        code, out, err = run("discover", "@nowhere", "--config", str(config))
        assert code == 2
        assert "nowhere" in err

    def test_unreachable_service(self, run):
        code, out, err = run("discover", "http://127.0.0.1:9/wps")
        assert code == 2
        assert out == ""
        assert err != ""


# --- describe -----------------------------------------------------------------


class TestDescribe:
    def test_table(self, live, run):
        code, out, err = run("describe", live["wps"], "Buffer")
        assert (code, err) == (0, "")
        assert out.startswith("Buffer: Buffer")
        rows = [line.split() for line in out.splitlines() if line.startswith("  ")]
        assert ["geometry", "Complex", "text/xml", "1..1"] in rows
        assert ["distance", "Literal", "double", "1..1"] in rows
        assert ["result", "Complex", "text/xml"] in rows

    def test_unknown_process(self, live, run):
        code, out, err = run("describe", live["wps"], "Reproject")
        assert code == 3
        assert "InvalidParameterValue" in err

    def test_json_matches_the_bridge_response_body(self, live, run):
        code, out, err = run("describe", live["wps"], "Buffer", "--json")
        assert code == 0
        bridge = BridgeService(upstream=HttpTransport())
        path = f"/api/process?url={quote(live['wps'], safe='')}&id=Buffer"
        response = bridge.handle(Request("GET", "http://bridge" + path))
        served = json.loads(response.body)["ok"]
        assert out == canonical_json(served) + "\n"


# --- execute ------------------------------------------------------------------


class TestExecute:
    def test_buffer_to_geojson_file(self, live, run, road_files):
        out_path = road_files["dir"] / "buf.geojson"
        code, out, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}",
            "--literal", "distance=1",
            "--out", str(out_path),
        )
        assert (code, err) == (0, "")
        assert json.loads(out_path.read_text()) == expected_buffer_geojson()

    def test_geojson_input_behaves_like_gml_input(self, live, run, road_files):
        a = road_files["dir"] / "a.geojson"
        b = road_files["dir"] / "b.geojson"
        run("execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--out", str(a))
        run("execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['geojson']}", "--literal", "distance=1",
            "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_written_file_round_trips_to_the_same_geometry(self, live, run, road_files):
        out_path = road_files["dir"] / "buf.geojson"
        run("execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--out", str(out_path))
        collection = parse_interchange(out_path.read_text())
        assert len(collection.features) == 1
        assert collection.features[0].geometry == kernel_buffer(ROAD1, 1.0)

    def test_gml_output_by_extension(self, live, run, road_files):
        out_path = road_files["dir"] / "buf.gml"
        code, _, _ = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--out", str(out_path),
        )
        assert code == 0
        assert out_path.read_bytes() == serialize_geometry(kernel_buffer(ROAD1, 1.0))

    def test_wfs_reference_and_inline_write_identical_files(self, live, run, road_files):
        inline = road_files["dir"] / "inline.geojson"
        sent = road_files["dir"] / "sent.geojson"
        fetched = road_files["dir"] / "fetched.geojson"
        run("execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--out", str(inline))
        wfs_spec = f"geometry={live['wfs']},roads,featureId=road.1"
        code_sent, _, _ = run(
            "execute", live["wps"], "Buffer", "--wfs", wfs_spec,
            "--literal", "distance=1", "--out", str(sent))
        code_fetched, _, _ = run(
            "execute", live["wps"], "Buffer", "--wfs", wfs_spec, "--fetch-client-side", "geometry",
            "--literal", "distance=1", "--out", str(fetched))
        assert code_sent == code_fetched == 0
        assert inline.read_bytes() == sent.read_bytes() == fetched.read_bytes()

    def test_plain_reference_flag(self, live, run, road_files):
        out_path = road_files["dir"] / "ref.geojson"
        href = f"{live['wfs']}?service=WFS&version=1.1.0&request=GetFeature&typeName=roads&featureId=road.1"
        code, _, err = run(
            "execute", live["wps"], "Buffer", "--reference", f"geometry={href}",
            "--literal", "distance=1", "--out", str(out_path))
        assert (code, err) == (0, "")
        assert json.loads(out_path.read_text()) == expected_buffer_geojson()

    def test_raw_literal_output_goes_to_stdout(self, live, run, road_files):
        code, out, err = run(
            "execute", live["wps"], "Centroid",
            "--complex", f"geometry=@{road_files['gml']}", "--raw", "result")
        assert (code, err) == (0, "")
        center = kernel_centroid(ROAD1)
        assert out == f"{format_coord(center.x)} {format_coord(center.y)}\n"

    def test_missing_required_input(self, live, run, road_files):
        code, out, err = run(
            "execute", live["wps"], "Buffer", "--complex", f"geometry=@{road_files['gml']}")
        assert code == 4
        assert err == "MissingRequired: distance\n"

    def test_unparseable_literal(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=wide")
        assert code == 4
        assert err == "LiteralParseError: distance\n"

    def test_unknown_input(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}",
            "--literal", "distance=1", "--literal", "speed=3")
        assert code == 4
        assert err == "UnknownInput: speed\n"

    def test_remote_failure(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=-2")
        assert code == 3
        assert "InvalidParameterValue" in err

    def test_unknown_raw_output(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--raw", "nope")
        assert code == 4
        assert "nope" in err

    def test_fetch_client_side_without_a_reference(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--fetch-client-side", "geometry")
        assert code == 4
        assert err == "FetchClientSideWithoutReference: geometry\n"

    def test_missing_input_file(self, live, run, tmp_path):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{tmp_path}/absent.gml", "--literal", "distance=1")
        assert code == 5
        assert "absent.gml" in err

    def test_unwritable_output_path(self, live, run, road_files):
        code, _, err = run(
            "execute", live["wps"], "Buffer",
            "--complex", f"geometry=@{road_files['gml']}", "--literal", "distance=1",
            "--out", str(road_files["dir"] / "never" / "made" / "buf.geojson"))
        assert code == 5

    def test_malformed_literal_flag(self, live, run):
        code, _, err = run("execute", live["wps"], "Buffer", "--literal", "distance")
        assert code == 2
        assert "id=value" in err


# --- config loading ----------------------------------------------------------


class TestCliConfig:
    def test_defaults(self):
        assert load_cli_config(None) == CliConfig()

    def test_bridge_keys_are_tolerated(self, tmp_path):
        path = tmp_path / "geobind.toml"
        path.write_text(
            'listen_address = "127.0.0.1:8123"\n'
            'output_format = "gml"\n'
            '[[default_endpoints]]\nname = "mock"\nurl = "http://127.0.0.1/wps"\n'
        )
        config = load_cli_config(str(path))
        assert config.output_format == "gml"
        assert config.endpoint("mock") == "http://127.0.0.1/wps"

    @pytest.mark.parametrize(
        "content",
        [
            "mystery = 1\n",
            'output_format = "kml"\n',
            "output_format = 3\n",
            '[[default_endpoints]]\nname = "a"\nurl = "u"\n'
            '[[default_endpoints]]\nname = "a"\nurl = "v"\n',
        ],
    )
    def test_rejected_files(self, tmp_path, content):
        path = tmp_path / "geobind.toml"
        path.write_text(content)
        with pytest.raises(ConfigError):
            load_cli_config(str(path))

    def test_missing_explicit_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_cli_config(str(tmp_path / "nope.toml"))

    def test_discovery_order(self, live, run, tmp_path, monkeypatch):
        def config_with(url, name):
            path = tmp_path / name
            path.write_text(f'[[default_endpoints]]\nname = "mock"\nurl = "{url}"\n')
            return path

        dead = "http://127.0.0.1:9/wps"
        flag_file = config_with(live["wps"], "flag.toml")
        env_file = config_with(dead, "env.toml")
        cwd_dir = tmp_path / "cwd"
        cwd_dir.mkdir()
        (cwd_dir / "geobind.toml").write_text(
            f'[[default_endpoints]]\nname = "mock"\nurl = "{dead}"\n'
        )
        monkeypatch.chdir(cwd_dir)

        # the flag beats the environment beats the working directory
        monkeypatch.setenv("GEOBIND_CONFIG", str(env_file))
        assert run("discover", "@mock", "--config", str(flag_file))[0] == 0
        assert run("discover", "@mock")[0] == 2  # env file points at the dead port

        monkeypatch.setenv("GEOBIND_CONFIG", str(config_with(live["wps"], "env2.toml")))
        assert run("discover", "@mock")[0] == 0

        monkeypatch.delenv("GEOBIND_CONFIG")
        assert run("discover", "@mock")[0] == 2  # falls through to ./geobind.toml


# --- serve (real subprocesses) -------------------------------------------------


def spawn_serve(*argv):
    return subprocess.Popen(
        [sys.executable, "-m", "geobind.cli", "serve", *argv],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )


def read_lines(proc, count):
    return [proc.stdout.readline().strip() for _ in range(count)]


def free_port():
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        return probe.getsockname()[1]


class TestServe:
    def test_mock_prints_two_urls_and_stops_on_interrupt(self):
        proc = spawn_serve("--mock")
        try:
            wps_url, wfs_url = read_lines(proc, 2)
            assert wps_url.endswith("/wps") and wfs_url.endswith("/wfs")
            response = HttpTransport(5.0)(
                Request("GET", wps_url + "?service=WPS&request=GetCapabilities")
            )
            assert response.status == 200
        finally:
            proc.send_signal(signal.SIGINT)
        assert proc.wait(timeout=10) == 0

    def test_mock_with_bridge_prints_three_urls(self):
        proc = spawn_serve("--mock", "--bridge")
        try:
            wps_url, wfs_url, bridge_url = read_lines(proc, 3)
            defaults = HttpTransport(5.0)(
                Request("GET", bridge_url.rstrip("/") + "/api/defaults")
            )
            assert json.loads(defaults.body)["ok"]["defaultEndpoints"] == [
                {"name": "mock", "url": wps_url}
            ]
        finally:
            proc.send_signal(signal.SIGINT)
        assert proc.wait(timeout=10) == 0

    def test_port_in_use_exits_2(self):
        port = free_port()
        first = spawn_serve("--mock", "--wps-port", str(port))
        try:
            read_lines(first, 2)
            second = subprocess.run(
                [sys.executable, "-m", "geobind.cli", "serve", "--mock", "--wps-port", str(port)],
                capture_output=True,
                text=True,
                timeout=30,
            )
            assert second.returncode == 2
            assert "in use" in second.stderr
        finally:
            first.send_signal(signal.SIGINT)
        assert first.wait(timeout=10) == 0
