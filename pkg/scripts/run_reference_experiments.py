#!/usr/bin/env python3
"""Desk-scale measure -> model loop against the built-in pipelines.

Starts the API plus all three reference pipeline variants, runs a scaled
ramp experiment against each, prints the experiment table, and fits a twin
from each run. The ramp peaks above every variant's capacity so each run
shows its saturation plateau.

    python scripts/run_reference_experiments.py            # ~2 min
    python scripts/run_reference_experiments.py --fast     # ~40 s, coarser
"""

import argparse
import tempfile
import time

import requests

from windtunnel.apiservice import serve_all
from windtunnel.reporting import experiment_table, render_table, twin_table

SCHEMA = {
    "name": "telemetry",
    "fields": [
        {"name": "vin", "kind": "string-pattern", "constraint": {"pattern": "???-####"}},
        {"name": "speed", "kind": "float", "constraint": {"min": 0, "max": 120}},
        {"name": "position", "kind": "latlong",
         "constraint": {"lat_min": 39.9, "lat_max": 40.1,
                        "lon_min": -83.1, "lon_max": -82.9}},
    ],
}

# (variant, ramp duration s, peak rps) - peaks sit above each capacity
RUNS = [
    ("no-blocking-write", 30.0, 10.0),
    ("blocking-write", 20.0, 4.0),
    ("cpu-limited", 20.0, 1.6),
]


def wait_done(api: str, name: str, timeout_s: float = 300.0) -> dict:
    deadline = time.time() + timeout_s
    while time.time() < deadline:
        status = requests.get(f"{api}/api/experiments/{name}/status").json()
        if status["state"] in ("Completed", "Failed"):
            return status
        time.sleep(0.5)
    raise TimeoutError(name)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fast", action="store_true", help="halve every ramp")
    parser.add_argument("--data-dir", default=None,
                        help="workspace dir (default: a temp dir)")
    args = parser.parse_args()
    scale = 0.5 if args.fast else 1.0

    data_dir = args.data_dir or tempfile.mkdtemp(prefix="windtunnel-")
    handle = serve_all(data_dir, ref_presets=[variant for variant, _, _ in RUNS])
    print(f"api: {handle.api_url}  data: {data_dir}")
    try:
        api = handle.api_url
        requests.put(f"{api}/api/schemas/telemetry", json=SCHEMA).raise_for_status()
        requests.put(f"{api}/api/datasets/ds", json={
            "schema": {"kind": "schema", "name": "telemetry"},
            "record_count": 200, "format": "csv", "compression": "zip",
            "files_per_archive": 5, "seed": 42}).raise_for_status()

        results = []
        twins = []
        for variant, duration, peak in RUNS:
            pattern_name = f"ramp-{variant}"
            requests.put(f"{api}/api/loadpatterns/{pattern_name}", json={
                "segments": [{"duration_s": duration * scale, "start_rps": 0.0,
                              "end_rps": peak}]}).raise_for_status()
            exp_name = f"exp-{variant}"
            requests.post(f"{api}/api/experiments", json={
                "name": exp_name,
                "pipeline": {"kind": "pipeline", "name": f"ref-{variant}"},
                "dataset": {"kind": "dataset", "name": "ds"},
                "load_pattern": {"kind": "loadpattern", "name": pattern_name},
                "drain_idle_timeout_s": 2.0}).raise_for_status()
            requests.post(f"{api}/api/experiments/{exp_name}/start").raise_for_status()
            print(f"running {exp_name} ...")
            status = wait_done(api, exp_name)
            if status["state"] != "Completed":
                raise SystemExit(f"{exp_name} failed: {status.get('error')}")
            results.append((variant, status["result"]))

            fit = requests.post(f"{api}/api/twins/fit", json={
                "name": f"twin-{variant}", "experiment": exp_name})
            fit.raise_for_status()
            twins.append((variant, fit.json()["twin"]))

        print("\nExperiment results (costs in major units; no billing ingested -> 0):\n")
        table, _ = experiment_table(results)
        print(render_table(table))
        print("Fitted twins:\n")
        print(render_table(twin_table(twins)))
        print("note: measured capacities approach the configured 6.15 / 1.95 / 0.66"
              " rec/s as the ramp length grows; short desk ramps sit slightly below"
              " because the ramp spends time under capacity.")
    finally:
        handle.stop()


if __name__ == "__main__":
    main()
