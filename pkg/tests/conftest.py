import threading
import time

import pytest

from windtunnel._http import HttpServer, Response, Router
from windtunnel.workspace import Workspace


TELEMETRY_SCHEMA = {
    "name": "telemetry",
    "fields": [
        {"name": "vin", "kind": "string-pattern", "constraint": {"pattern": "???-####"}},
        {"name": "speed", "kind": "float", "constraint": {"min": 0, "max": 120}},
        {"name": "engine", "kind": "choice", "constraint": {"choices": ["ok", "warn", "fault"]}},
        {"name": "odometer", "kind": "int", "constraint": {"min": 0, "max": 500000}},
        {"name": "sent_at", "kind": "timestamp",
         "constraint": {"min": "2024-01-01T00:00:00Z", "max": "2024-12-31T23:59:59Z"}},
        {"name": "position", "kind": "latlong",
         "constraint": {"lat_min": 39.9, "lat_max": 40.1, "lon_min": -83.1, "lon_max": -82.9}},
    ],
}


@pytest.fixture
def workspace(tmp_path):
    return Workspace(tmp_path / "data")


@pytest.fixture
def telemetry_schema():
    return dict(TELEMETRY_SCHEMA)


class StubSink:
    """HTTP endpoint that records every request and answers 200.

    ``delay_s`` holds the response (not the accept) to emulate a slow
    pipeline; ``fail_after`` makes later requests return 503.
    """

    def __init__(self, delay_s: float = 0.0, fail_after: int | None = None):
        self.delay_s = delay_s
        self.fail_after = fail_after
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        router = Router()
        router.add("POST", r"/.*", self._handle)
        router.add("GET", r"/.*", lambda req: {"ok": True})
        self.server = HttpServer(router).start()
        self.url = self.server.url + "/"

    def _handle(self, req):
        with self._lock:
            self.requests.append({
                "ts": time.time(),
                "path": req.path,
                "headers": dict(req.headers),
                "body": req.body,
            })
            n = len(self.requests)
        if self.delay_s:
            time.sleep(self.delay_s)
        if self.fail_after is not None and n > self.fail_after:
            return Response.json({"error": "overloaded"}, status=503)
        return {"ok": True}

    def stop(self):
        self.server.stop()


@pytest.fixture
def stub_sink():
    sinks = []

    def make(**kwargs) -> StubSink:
        sink = StubSink(**kwargs)
        sinks.append(sink)
        return sink

    yield make
    for sink in sinks:
        sink.stop()
