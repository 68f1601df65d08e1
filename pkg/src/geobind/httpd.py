"""Threaded loopback HTTP hosting for handler functions.

Any callable from Request to Response can be bound to a port; the adapter
converts between the socket layer and the same value types the in-process
transports use, so a service tested as a function runs unchanged as a server.
"""

from __future__ import annotations

import errno
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional, Tuple

from .errors import PortInUse
from .transport import Request, Response

Handler = Callable[[Request], Response]


class HandlerServer(ThreadingHTTPServer):
    daemon_threads = True
    handler_fn: Handler


class _Adapter(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _dispatch(self, body: Optional[bytes]) -> None:
        host, port = self.server.server_address[:2]
        request = Request(
            method=self.command,
            url=f"http://{host}:{port}{self.path}",
            headers=dict(self.headers.items()),
            body=body,
        )
        response = self.server.handler_fn(request)
        payload = response.body or b""
        self.send_response(response.status)
        for name, value in response.headers.items():
            if name.lower() not in ("content-length", "connection"):
                self.send_header(name, value)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):  # noqa: N802 — http.server callback names
        self._dispatch(None)

    def do_POST(self):  # noqa: N802
        length = int(self.headers.get("Content-Length") or 0)
        self._dispatch(self.rfile.read(length) if length else b"")

    def log_message(self, format, *args):  # noqa: A002 — http.server signature
        pass  # keep stdout/stderr clean; diagnostics belong to the services


def serve_handler(
    handler: Handler, port: int, host: str = "127.0.0.1"
) -> Tuple[HandlerServer, threading.Thread]:
    """Bind and start serving; returns the live server and its thread."""
    try:
        server = HandlerServer((host, port), _Adapter)
    except OSError as err:
        if err.errno == errno.EADDRINUSE:
            raise PortInUse(f"port {port} is already in use") from None
        raise
    server.handler_fn = handler
    thread = threading.Thread(
        target=server.serve_forever, daemon=True, name=f"httpd-{server.server_address[1]}"
    )
    thread.start()
    return server, thread
