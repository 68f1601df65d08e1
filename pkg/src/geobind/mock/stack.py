"""Runs the WPS and WFS services as real loopback HTTP servers.

``start_mock_stack`` binds two threaded servers (ephemeral ports by default),
wires the WPS's reference fetching through a plain HTTP transport so it can
dereference hrefs pointing at the sibling WFS, and returns the two base URLs
plus a handle whose ``stop()`` tears everything down.  Stopping twice is fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

from ..errors import DatasetLoadError, GeobindError, PortInUse
from ..gml import FeatureCollection, parse_interchange
from ..httpd import serve_handler
from .wfs import WfsService, default_dataset
from .wps import WpsService


@dataclass(frozen=True)
class MockConfig:
    wps_port: int = 0  # 0 picks an ephemeral port
    wfs_port: int = 0
    dataset_path: Optional[str] = None  # GeoJSON replacing the built-in roads
    latency_ms: int = 0  # artificial delay per request

    def __post_init__(self):
        for name, port in (("wps_port", self.wps_port), ("wfs_port", self.wfs_port)):
            if not (0 <= port <= 65535):
                raise ValueError(f"{name} must be in [0, 65535], got {port}")
        if self.wps_port and self.wps_port == self.wfs_port:
            raise PortInUse(f"wps and wfs cannot share port {self.wps_port}")
        if self.latency_ms < 0:
            raise ValueError(f"latency_ms cannot be negative, got {self.latency_ms}")


class MockStack:
    """Shutdown handle for a running pair of mock servers."""

    def __init__(self, wps_url, wfs_url, servers, threads):
        self.wps_url = wps_url
        self.wfs_url = wfs_url
        self._servers = servers
        self._threads = threads
        self._stopped = False

    def stop(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        for server in self._servers:
            server.shutdown()
            server.server_close()
        for thread in self._threads:
            thread.join(timeout=5)

    close = stop

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()
        return False


def _load_dataset(path: Optional[str]) -> FeatureCollection:
    if path is None:
        return default_dataset()
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise DatasetLoadError(f"cannot read dataset {path}: {err}") from None
    try:
        return parse_interchange(raw)
    except (ValueError, GeobindError) as err:
        raise DatasetLoadError(f"cannot parse dataset {path}: {err}") from None


def start_mock_stack(config: MockConfig = MockConfig()) -> Tuple[str, str, MockStack]:
    """Bind both services and return (wps_url, wfs_url, shutdown handle)."""
    dataset = _load_dataset(config.dataset_path)
    wps = WpsService(latency_ms=config.latency_ms)
    wfs = WfsService(dataset, latency_ms=config.latency_ms)

    wps_server, wps_thread = serve_handler(wps.handle, config.wps_port)
    try:
        wfs_server, wfs_thread = serve_handler(wfs.handle, config.wfs_port)
    except BaseException:
        wps_server.shutdown()
        wps_server.server_close()
        raise

    stack = MockStack(
        wps_url=f"http://127.0.0.1:{wps_server.server_address[1]}/wps",
        wfs_url=f"http://127.0.0.1:{wfs_server.server_address[1]}/wfs",
        servers=(wps_server, wfs_server),
        threads=(wps_thread, wfs_thread),
    )
    return stack.wps_url, stack.wfs_url, stack
