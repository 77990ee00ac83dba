"""Minimal threaded HTTP server with a regex route table.

Shared by the API service and the built-in reference pipeline so both
speak the same dialect: JSON bodies, machine-readable errors, HTTP/1.1
keep-alive. Handlers receive a Request and return a Response (or a plain
dict, treated as 200 JSON).
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, str]
    headers: dict[str, str]
    body: bytes
    params: dict[str, str] = field(default_factory=dict)

    def json(self):
        try:
            return json.loads(self.body.decode("utf-8")) if self.body else None
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise HttpError(400, "bad-json", f"request body is not valid JSON: {exc}")

    def text(self) -> str:
        return self.body.decode("utf-8")


@dataclass
class Response:
    status: int = 200
    body: bytes = b""
    content_type: str = "application/json"
    headers: dict[str, str] = field(default_factory=dict)

    @classmethod
    def json(cls, payload, status: int = 200) -> "Response":
        return cls(status=status,
                   body=(json.dumps(payload, sort_keys=True) + "\n").encode("utf-8"))

    @classmethod
    def text(cls, payload: str, status: int = 200, content_type: str = "text/plain") -> "Response":
        return cls(status=status, body=payload.encode("utf-8"), content_type=content_type)


class HttpError(Exception):
    def __init__(self, status: int, code: str, message: str, field_path: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field_path = field_path

    def to_response(self) -> Response:
        err = {"code": self.code, "message": self.message}
        if self.field_path:
            err["field"] = self.field_path
        return Response.json({"error": err}, status=self.status)


_CONTENT_TYPES = {
    ".html": "text/html", ".js": "text/javascript", ".mjs": "text/javascript",
    ".css": "text/css", ".json": "application/json", ".svg": "image/svg+xml",
    ".png": "image/png", ".ico": "image/x-icon", ".map": "application/json",
}


class Router:
    def __init__(self):
        self._routes: list[tuple[str, re.Pattern, object]] = []
        self._static: list[tuple[str, Path]] = []

    def add(self, method: str, pattern: str, handler) -> None:
        """``pattern`` is a regex matched against the full path; named
        groups become request params."""
        self._routes.append((method.upper(), re.compile(f"^{pattern}$"), handler))

    def add_static(self, prefix: str, directory: str | Path) -> None:
        self._static.append((prefix.rstrip("/"), Path(directory)))

    def dispatch(self, request: Request) -> Response:
        for prefix, directory in self._static:
            if request.method == "GET" and request.path.startswith(prefix):
                return self._serve_static(prefix, directory, request.path)
        for method, pattern, handler in self._routes:
            if method != request.method:
                continue
            match = pattern.match(request.path)
            if match:
                request.params = match.groupdict()
                result = handler(request)
                if isinstance(result, Response):
                    return result
                return Response.json(result)
        raise HttpError(404, "not-found", f"no route for {request.method} {request.path}")

    def _serve_static(self, prefix: str, directory: Path, path: str) -> Response:
        rel = path[len(prefix):].lstrip("/") or "index.html"
        target = (directory / rel).resolve()
        if not str(target).startswith(str(directory.resolve())) or not target.is_file():
            raise HttpError(404, "not-found", f"no such file: {rel}")
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        return Response(status=200, body=target.read_bytes(), content_type=ctype)


def _make_handler(router: Router):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _handle(self):
            parsed = urlparse(self.path)
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
            request = Request(method=self.command, path=parsed.path, query=query,
                              headers={k: v for k, v in self.headers.items()}, body=body)
            try:
                response = router.dispatch(request)
            except HttpError as exc:
                response = exc.to_response()
            except Exception as exc:  # noqa: BLE001 - surface as 500, keep serving
                response = HttpError(500, "internal", f"{type(exc).__name__}: {exc}").to_response()
            try:
                self.send_response(response.status)
                self.send_header("Content-Type", response.content_type)
                self.send_header("Content-Length", str(len(response.body)))
                for key, value in response.headers.items():
                    self.send_header(key, value)
                self.end_headers()
                self.wfile.write(response.body)
            except (BrokenPipeError, ConnectionResetError):
                pass

        do_GET = do_POST = do_PUT = do_DELETE = _handle

    return Handler


class HttpServer:
    """ThreadingHTTPServer wrapper that serves from a daemon thread."""

    def __init__(self, router: Router, host: str = "127.0.0.1", port: int = 0):
        self.router = router
        self._server = ThreadingHTTPServer((host, port), _make_handler(router))
        self._server.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "HttpServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="http-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
