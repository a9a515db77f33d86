from __future__ import annotations

import http.server
import threading
import time
from pathlib import Path

import pytest

SCENARIOS_ROOT = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenarios_root() -> Path:
    return SCENARIOS_ROOT


class ScriptedHTTPServer:
    """Local HTTP stub replying from an ordered (status, body) script; the
    last entry repeats once the script is exhausted."""

    def __init__(self, script: list[tuple[int, str]], delay: float = 0.0):
        self.script = list(script)
        self.calls = 0
        self.delay = delay
        outer = self

        class Handler(http.server.BaseHTTPRequestHandler):
            def _respond(self) -> None:
                if outer.delay:
                    time.sleep(outer.delay)
                index = min(outer.calls, len(outer.script) - 1)
                status, body = outer.script[index]
                outer.calls += 1
                data = body.encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self) -> None:
                self._respond()

            def do_POST(self) -> None:
                self._respond()

            def log_message(self, *args) -> None:
                pass

        self.server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_address[1]}"

    def stop(self) -> None:
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def http_stub():
    servers: list[ScriptedHTTPServer] = []

    def start(script: list[tuple[int, str]], delay: float = 0.0) -> ScriptedHTTPServer:
        server = ScriptedHTTPServer(script, delay=delay)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()
