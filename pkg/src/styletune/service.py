"""HTTP service for interactive stylization (the strength-slider backend).

Plain threaded HTTP/1.1, no auth.  Weights are immutable while serving, so
any number of stylize requests may run in parallel; each request works on
its own buffers and identical requests always produce identical bytes.

    POST /api/stylize?alpha=REAL   body: PNG  ->  PNG
    GET  /api/health               -> {"status":"ok"}
    GET  /api/model                -> architecture + checkpoint metadata
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .encoder import EncoderWeights
from .imageio import ImageFormatError
from .infer import model_metadata, stylize_png_bytes
from .network import TransformerWeights
from .tensor import ShapeError

__all__ = ["ServiceState", "create_server", "serve"]

DEFAULT_MAX_BODY = 8 * 1024 * 1024
_TRAINED_RANGE = (0.0, 10.0)


@dataclass
class ServiceState:
    """Everything a request handler may read; never mutated while serving."""

    weights: TransformerWeights
    image_size: int
    metadata: dict
    max_body_bytes: int = DEFAULT_MAX_BODY
    ui_dir: str | None = None
    encoder: EncoderWeights | None = None  # reserved for loss reporting


def _json_bytes(obj) -> bytes:
    return json.dumps(obj).encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "styletune"
    state: ServiceState  # assigned by create_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, code: int, body: bytes, ctype: str, extra: dict | None = None):
        # error responses may leave an unread request body on the socket, so
        # close rather than let the next keep-alive read parse it as a request
        if code >= 400:
            self.close_connection = True
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        if self.close_connection:
            self.send_header("Connection", "close")
        for k, v in (extra or {}).items():
            self.send_header(k, v)
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, code: int, obj, extra: dict | None = None):
        self._send(code, _json_bytes(obj), "application/json", extra)

    # -- GET ---------------------------------------------------------------

    def do_GET(self):
        path = urlparse(self.path).path
        if path == "/api/health":
            self._send(200, b'{"status":"ok"}', "application/json")
        elif path == "/api/model":
            self._send_json(200, self.state.metadata)
        elif self.state.ui_dir and (path == "/" or path.startswith("/ui")):
            self._serve_ui(path)
        else:
            self._send_json(404, {"error": "not found"})

    def _serve_ui(self, path: str):
        import os

        rel = "index.html" if path in ("/", "/ui", "/ui/") else path[len("/ui/"):]
        rel = os.path.normpath(rel)
        if rel.startswith(".."):
            self._send_json(404, {"error": "not found"})
            return
        full = os.path.join(self.state.ui_dir, rel)
        if not os.path.isfile(full):
            self._send_json(404, {"error": "not found"})
            return
        ctype = {
            ".html": "text/html",
            ".js": "application/javascript",
            ".css": "text/css",
        }.get(os.path.splitext(full)[1], "application/octet-stream")
        with open(full, "rb") as fh:
            self._send(200, fh.read(), ctype)

    # -- POST --------------------------------------------------------------

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/stylize":
            self._send_json(404, {"error": "not found"})
            return
        query = parse_qs(url.query)
        raw_alpha = query.get("alpha", [None])[0]
        if raw_alpha is None:
            self._send_json(400, {"error": "invalid alpha"})
            return
        try:
            alpha = float(raw_alpha)
        except ValueError:
            self._send_json(400, {"error": "invalid alpha"})
            return
        if not math.isfinite(alpha):
            self._send_json(400, {"error": "invalid alpha"})
            return

        length = self.headers.get("Content-Length")
        try:
            length = int(length)
        except (TypeError, ValueError):
            self._send_json(400, {"error": "missing body"})
            return
        if length > self.state.max_body_bytes:
            self._send_json(413, {"error": "body too large"})
            return
        body = self.rfile.read(length)

        try:
            png = stylize_png_bytes(self.state.weights, body, alpha, self.state.image_size)
        except (ImageFormatError, ShapeError):
            self._send_json(400, {"error": "undecodable image"})
            return
        size = self.state.image_size
        extra = {
            "X-Alpha": repr(alpha),
            "X-Applied-Size": f"{size}x{size}",
        }
        lo, hi = _TRAINED_RANGE
        if alpha < lo or alpha > hi:
            extra["X-Alpha-Extrapolated"] = "true"
        self._send(200, png, "image/png", extra)


def create_server(state: ServiceState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve(state: ServiceState, host: str = "127.0.0.1", port: int = 0) -> None:
    """Run until interrupted; prints the bound port (useful with port 0)."""
    server = create_server(state, host, port)
    print(f"serving on http://{server.server_address[0]}:{server.server_address[1]}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
