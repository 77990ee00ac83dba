#!/usr/bin/env python3
"""Start a seeded API for studio tests: 3 twins, 2 traffic models.

Prints one JSON line {"url": ...} and serves until stdin closes.
"""

import json
import sys
import tempfile

from windtunnel.apiservice import serve_all
from windtunnel.catalog import Kind
from windtunnel.traffic import example_high, example_nominal

TWINS = {
    "block": {"kind": "simple", "capacity_rps": 1.95,
              "cost_rate_minor_per_hr": 0.82, "base_latency_s": 0.15},
    "non-block": {"kind": "simple", "capacity_rps": 6.15,
                  "cost_rate_minor_per_hr": 7.03, "base_latency_s": 0.06},
    "cpu-lim": {"kind": "simple", "capacity_rps": 0.66,
                "cost_rate_minor_per_hr": 0.27, "base_latency_s": 0.29},
}


def main() -> None:
    handle = serve_all(tempfile.mkdtemp(prefix="studio-test-"))
    for name, body in TWINS.items():
        handle.workspace.put_entity(Kind.TWIN, name, body)
    handle.workspace.put_entity(Kind.TRAFFIC, "nominal", example_nominal().to_dict())
    handle.workspace.put_entity(Kind.TRAFFIC, "high", example_high().to_dict())
    print(json.dumps({"url": handle.api_url}), flush=True)
    sys.stdin.read()
    handle.stop()


if __name__ == "__main__":
    main()
