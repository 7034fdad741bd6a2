"""Shared fixtures: paths and a local multi-virtual-host HTTP test server."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@dataclass
class ServerState:
    """Request log and concurrency tracking shared with the tests."""

    requests: list = field(default_factory=list)  # (host, path, monotonic)
    active: int = 0
    max_active: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    # host -> robots body; special value "hang" makes the robots fetch stall.
    robots: dict = field(default_factory=dict)
    page_delay: float = 0.0

    def arrivals(self, host: str) -> list[float]:
        with self.lock:
            return [t for h, _, t in self.requests if h == host]

    def paths(self, host: str | None = None) -> list[str]:
        with self.lock:
            return [p for h, p, _ in self.requests if host is None or h == host]


_ARTICLE = (
    "<html><head><title>t</title></head><body><nav>Home About</nav>"
    "<article><p>"
    + "This is the main article body with plenty of meaningful text. " * 4
    + "</p></article><footer>contact</footer></body></html>"
)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    state: ServerState  # injected by the server factory

    def log_message(self, *args) -> None:  # silence request logging
        pass

    def _send(self, status: int, body: bytes, content_type: str = "text/html; charset=utf-8", headers: dict | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        for name, value in (headers or {}).items():
            self.send_header(name, value)
        self.end_headers()
        try:
            self.wfile.write(body)
        except (BrokenPipeError, ConnectionResetError):
            pass

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        state = self.state
        host = (self.headers.get("Host") or "").split(":")[0]
        with state.lock:
            state.active += 1
            state.max_active = max(state.max_active, state.active)
            state.requests.append((host, self.path, time.monotonic()))
        try:
            self._route(host)
        finally:
            with state.lock:
                state.active -= 1

    def _route(self, host: str) -> None:
        state = self.state
        path = self.path
        if state.page_delay and path != "/robots.txt":
            time.sleep(state.page_delay)

        if path == "/robots.txt":
            behavior = state.robots.get(host)
            if behavior == "hang":
                time.sleep(3.0)
                self._send(200, b"User-agent: *\nAllow: /\n", "text/plain")
            elif behavior is None:
                self._send(404, b"no robots here")
            else:
                self._send(200, behavior.encode(), "text/plain")
        elif path.startswith("/ok") or path.startswith("/private"):
            self._send(200, _ARTICLE.encode())
        elif path == "/big":
            self._send(200, (b"a" * 120_000))
        elif path == "/tiny":
            self._send(200, b"x" * 30)
        elif path == "/pdf":
            self._send(200, b"%PDF-1.4 fake pdf body", "application/pdf")
        elif path == "/botblock":
            self._send(200, b"<html><body>Just a moment... Enable JavaScript and cookies to continue.</body></html>")
        elif path == "/login":
            self._send(200, b"<html><body>Log in to continue. Session expired.</body></html>")
        elif path == "/error500":
            self._send(500, b"internal server error page")
        elif path == "/forbidden":
            self._send(403, b"forbidden")
        elif path == "/hang":
            time.sleep(5.0)
            self._send(200, _ARTICLE.encode())
        elif path == "/redirect1":
            self._send(301, b"", headers={"Location": "/ok"})
        elif path == "/loopA":
            self._send(301, b"", headers={"Location": "/loopB"})
        elif path == "/loopB":
            self._send(301, b"", headers={"Location": "/loopA"})
        else:
            self._send(404, b"not found not found not found")


@dataclass
class TestServer:
    state: ServerState
    port: int

    def url(self, host: str, path: str) -> str:
        return f"http://{host}:{self.port}{path}"

    def aliases(self, *hosts: str) -> dict[str, str]:
        return {host: f"127.0.0.1:{self.port}" for host in hosts}


@pytest.fixture()
def test_server():
    state = ServerState()
    handler = type("Handler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    server.daemon_threads = True
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield TestServer(state=state, port=server.server_address[1])
    finally:
        server.shutdown()
        server.server_close()
