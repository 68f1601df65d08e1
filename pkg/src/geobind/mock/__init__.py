"""Offline WPS/WFS stand-ins serving canned protocol documents.

The capabilities and description bodies are files, served byte-identical on
every request; only Execute and GetFeature responses are computed.
"""

from importlib.resources import files

from .stack import MockConfig, start_mock_stack  # noqa: F401
from .wps import parse_execute_request, wps_handle  # noqa: F401
from .wfs import wfs_handle  # noqa: F401


def fixture_bytes(name: str) -> bytes:
    return files(__package__).joinpath("fixtures").joinpath(name).read_bytes()
