"""Request/response values and the pluggable transport capability.

Everything that talks to a server goes through a `Transport`: any callable
from Request to Response.  Production code uses HttpTransport; tests wire
the same client code straight into in-process handlers so no socket is
opened.  Transports return non-2xx responses as values — only connection
failures raise.
"""

from __future__ import annotations

import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .errors import TransportError

Transport = Callable[["Request"], "Response"]


@dataclass(frozen=True)
class Request:
    method: str
    url: str
    headers: Mapping[str, str] = field(default_factory=dict)
    body: Optional[bytes] = None


@dataclass(frozen=True)
class Response:
    status: int
    headers: Mapping[str, str] = field(default_factory=dict)
    body: bytes = b""

    def header(self, name: str, default: str = "") -> str:
        wanted = name.lower()
        for key, value in self.headers.items():
            if key.lower() == wanted:
                return value
        return default

    @property
    def content_type(self) -> str:
        return self.header("Content-Type").split(";")[0].strip()

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


class HttpTransport:
    """Blocking urllib-backed transport with a fixed timeout, no retries."""

    def __init__(self, timeout: float = 10.0):
        self.timeout = timeout

    def __call__(self, request: Request) -> Response:
        wire = urllib.request.Request(
            request.url,
            data=request.body,
            headers=dict(request.headers),
            method=request.method,
        )
        try:
            with urllib.request.urlopen(wire, timeout=self.timeout) as raw:
                return Response(raw.status, dict(raw.headers.items()), raw.read())
        except urllib.error.HTTPError as err:
            # an HTTP error status is still a response
            return Response(err.code, dict(err.headers.items()), err.read())
        except (urllib.error.URLError, OSError, TimeoutError) as err:
            reason = getattr(err, "reason", err)
            raise TransportError(f"{request.url}: {reason}") from None


class InProcessTransport:
    """Routes requests to handler callables by longest matching URL prefix."""

    def __init__(self, routes: Mapping[str, Callable[[Request], Response]]):
        self.routes = dict(routes)

    def __call__(self, request: Request) -> Response:
        best = None
        for prefix in self.routes:
            if request.url.startswith(prefix) and (best is None or len(prefix) > len(best)):
                best = prefix
        if best is None:
            raise TransportError(f"no in-process route for {request.url}")
        return self.routes[best](request)
