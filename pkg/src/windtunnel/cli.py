"""Command-line front door.

Verbs operate on a local data directory by default; pass --server to run
the same verbs against a live API instead (the CLI carries no logic of its
own either way). Exit status is nonzero whenever the touched entity is
Failed.

    windtunnel schema|dataset|loadpattern|pipeline|traffic|twin put NAME --file F
    windtunnel <kind> list
    windtunnel experiment run --file SPEC.json [--wait]
    windtunnel experiment status NAME
    windtunnel experiment report NAME...
    windtunnel twin fit NAME --experiment EXP [--kind simple|quickscaling]
    windtunnel traffic put NAME --file F | --example nominal|high
    windtunnel traffic preview NAME
    windtunnel sim run NAME --file CONFIG.json
    windtunnel sim compare NAME...
    windtunnel billing ingest --file BILLING.csv
    windtunnel serve [--port N] [--ref-preset VARIANT ...] [--studio-dir DIR]
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import reporting, traffic
from .catalog import Kind, UnknownEntityError, ValidationError
from .costing import parse_billing_csv
from .orchestrator import ExperimentSpec
from .workspace import Workspace

_PUT_KINDS = {
    "schema": Kind.SCHEMA,
    "dataset": Kind.DATASET,
    "loadpattern": Kind.LOADPATTERN,
    "pipeline": Kind.PIPELINE,
    "twin": Kind.TWIN,
    "traffic": Kind.TRAFFIC,
}

_ROUTE_OF = {
    Kind.SCHEMA: "schemas", Kind.DATASET: "datasets", Kind.LOADPATTERN: "loadpatterns",
    Kind.PIPELINE: "pipelines", Kind.EXPERIMENT: "experiments", Kind.TWIN: "twins",
    Kind.TRAFFIC: "traffic", Kind.SIMULATION: "simulations",
}


class ApiClient:
    """Thin requests wrapper used in --server mode."""

    def __init__(self, base_url: str):
        import requests

        self.base = base_url.rstrip("/")
        self._http = requests.Session()

    def _check(self, resp):
        if resp.status_code >= 400:
            try:
                detail = resp.json()["error"]["message"]
            except Exception:
                detail = resp.text
            raise SystemExit(f"error: API {resp.status_code}: {detail}")
        return resp.json()

    def put_entity(self, kind: Kind, name: str, body: dict) -> dict:
        return self._check(self._http.put(f"{self.base}/api/{_ROUTE_OF[kind]}/{name}", json=body))

    def list_entities(self, kind: Kind) -> list[dict]:
        return self._check(self._http.get(f"{self.base}/api/{_ROUTE_OF[kind]}"))["items"]

    def get(self, path: str) -> dict:
        return self._check(self._http.get(f"{self.base}{path}"))

    def post(self, path: str, payload=None, **kwargs) -> dict:
        return self._check(self._http.post(f"{self.base}{path}", json=payload, **kwargs))


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"error: cannot read {path}: {exc}")


def _emit(table: reporting.Table, fmt: str) -> None:
    if fmt == "csv":
        sys.stdout.write(reporting.render_csv(table))
    else:
        sys.stdout.write(reporting.render_table(table))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windtunnel",
                                     description="data pipeline wind tunnel")
    parser.add_argument("--data-dir", default="./windtunnel-data",
                        help="workspace directory (default ./windtunnel-data)")
    parser.add_argument("--format", choices=("table", "csv"), default="table")
    parser.add_argument("--server", help="API base URL; run as a thin client")
    sub = parser.add_subparsers(dest="entity", required=True)

    for noun in ("schema", "dataset", "loadpattern", "pipeline", "twin"):
        p = sub.add_parser(noun)
        pv = p.add_subparsers(dest="verb", required=True)
        put = pv.add_parser("put")
        put.add_argument("name")
        put.add_argument("--file", required=True, help="JSON entity body")
        pv.add_parser("list")

    tr = sub.add_parser("traffic")
    trv = tr.add_subparsers(dest="verb", required=True)
    trput = trv.add_parser("put")
    trput.add_argument("name")
    group = trput.add_mutually_exclusive_group(required=True)
    group.add_argument("--file")
    group.add_argument("--example", choices=("nominal", "high"))
    trv.add_parser("list")
    trprev = trv.add_parser("preview")
    trprev.add_argument("name")

    exp = sub.add_parser("experiment")
    expv = exp.add_subparsers(dest="verb", required=True)
    run = expv.add_parser("run")
    run.add_argument("--file", required=True, help="JSON experiment spec")
    status = expv.add_parser("status")
    status.add_argument("name")
    report = expv.add_parser("report")
    report.add_argument("names", nargs="+")
    expv.add_parser("list")

    twin_fit = sub.add_parser("twin-fit", help="alias: twin fit")
    twin_fit.add_argument("name")
    twin_fit.add_argument("--experiment", required=True)
    twin_fit.add_argument("--kind", choices=("simple", "quickscaling"), default="simple")

    sim = sub.add_parser("sim")
    simv = sim.add_subparsers(dest="verb", required=True)
    simrun = simv.add_parser("run")
    simrun.add_argument("name")
    simrun.add_argument("--file", required=True, help="JSON simulation config")
    simcmp = simv.add_parser("compare")
    simcmp.add_argument("names", nargs="+")
    simmonthly = simv.add_parser("monthly")
    simmonthly.add_argument("name")

    billing = sub.add_parser("billing")
    bv = billing.add_subparsers(dest="verb", required=True)
    bi = bv.add_parser("ingest")
    bi.add_argument("--file", required=True, help="billing CSV")

    serve = sub.add_parser("serve")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--ref-preset", action="append", default=[],
                       help="start a built-in reference pipeline (repeatable)")
    serve.add_argument("--studio-dir", help="built studio assets to serve at /studio")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    client = ApiClient(args.server) if args.server else None
    ws = None if client else Workspace(args.data_dir)

    try:
        return _dispatch(args, ws, client)
    except (ValidationError, UnknownEntityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args, ws: Workspace | None, client: ApiClient | None) -> int:
    fmt = args.format

    if args.entity in _PUT_KINDS and args.entity != "traffic":
        kind = _PUT_KINDS[args.entity]
        if args.verb == "put":
            body = _load_json(args.file)
            if client:
                out = client.put_entity(kind, args.name, body)
                print(json.dumps(out["ref"]))
            else:
                ref = ws.put_entity(kind, args.name, body)
                print(json.dumps(ref.to_dict()))
            return 0
        if args.verb == "list":
            items = client.list_entities(kind) if client else ws.list_entities(kind)
            cols = sorted({k for item in items for k in item})
            table = reporting.Table(columns=cols,
                                    rows=[[item.get(c) for c in cols] for item in items])
            _emit(table, fmt)
            return 0

    if args.entity == "traffic":
        return _traffic_verbs(args, ws, client, fmt)
    if args.entity == "experiment":
        return _experiment_verbs(args, ws, client, fmt)
    if args.entity == "twin-fit":
        payload = {"name": args.name, "experiment": args.experiment, "kind": args.kind}
        if client:
            out = client.post("/api/twins/fit", payload)
            print(json.dumps(out["twin"], sort_keys=True))
        else:
            model = ws.fit_twin(args.name, args.experiment, args.kind)
            print(json.dumps(model.to_dict(), sort_keys=True))
        return 0
    if args.entity == "sim":
        return _sim_verbs(args, ws, client, fmt)
    if args.entity == "billing":
        text = Path(args.file).read_text(encoding="utf-8")
        if client:
            out = client.post("/api/billing", data=text.encode("utf-8"),
                              headers={"Content-Type": "text/csv"}, payload=None)
            print(f"stored: {out['stored']}")
        else:
            stored = ws.billing.ingest(parse_billing_csv(text))
            print(f"stored: {stored}")
        return 0
    if args.entity == "serve":
        return _serve(args)
    raise SystemExit(f"error: unknown command {args.entity}")


def _traffic_verbs(args, ws, client, fmt) -> int:
    if args.verb == "put":
        if args.example:
            model = traffic.example_nominal() if args.example == "nominal" else traffic.example_high()
            body = model.to_dict()
        else:
            body = _load_json(args.file)
        if client:
            out = client.put_entity(Kind.TRAFFIC, args.name, body)
            print(json.dumps(out["ref"]))
        else:
            ref = ws.put_entity(Kind.TRAFFIC, args.name, body)
            print(json.dumps(ref.to_dict()))
        return 0
    if args.verb == "list":
        items = client.list_entities(Kind.TRAFFIC) if client else ws.list_entities(Kind.TRAFFIC)
        _emit(reporting.Table(columns=["name", "version"],
                              rows=[[i["name"], i["version"]] for i in items]), fmt)
        return 0
    if args.verb == "preview":
        if client:
            loads = client.get(f"/api/traffic/{args.name}/preview")["loads"]
        else:
            loads = ws.preview_traffic(args.name)
        _emit(reporting.plot_series("traffic-projection", loads=loads), fmt)
        return 0
    return 2


def _experiment_verbs(args, ws, client, fmt) -> int:
    if args.verb == "run":
        spec_body = _load_json(args.file)
        spec = ExperimentSpec.from_dict(spec_body.get("spec", spec_body))
        if client:
            client.post("/api/experiments", spec.to_dict())
            client.post(f"/api/experiments/{spec.name}/start?queue=true")
            while True:
                status = client.get(f"/api/experiments/{spec.name}/status")
                if status["state"] in ("Completed", "Failed"):
                    break
                time.sleep(1.0)
            state = status["state"]
            result = status.get("result")
        else:
            ws.orchestrator.submit(spec)
            ws.orchestrator.run(spec.name)
            doc = ws.catalog.get(Kind.EXPERIMENT, spec.name)
            state, result = doc.get("state"), doc.get("result")
        if state != "Completed":
            print(f"experiment {spec.name}: {state}", file=sys.stderr)
            return 1
        table, _ = reporting.experiment_table([(spec.name, result)])
        _emit(table, fmt)
        return 0

    if args.verb == "status":
        if client:
            status = client.get(f"/api/experiments/{args.name}/status")
        else:
            status = ws.orchestrator.status(args.name)
        print(json.dumps(status, sort_keys=True, default=str))
        return 1 if status.get("state") == "Failed" else 0

    if args.verb == "report":
        if client:
            results = []
            for name in args.names:
                rep = client.get(f"/api/experiments/{name}/report")
                result = rep.get("result") or {}
                if result:
                    result.setdefault("state", rep.get("state"))
                results.append((name, result or None))
        else:
            results = ws.experiment_results(args.names)
        table, warnings = reporting.experiment_table(results)
        for warning in warnings:
            print(f"warning: {warning}", file=sys.stderr)
        _emit(table, fmt)
        return 1 if warnings else 0

    if args.verb == "list":
        items = client.list_entities(Kind.EXPERIMENT) if client else ws.list_entities(Kind.EXPERIMENT)
        cols = ["name", "version", "state"]
        table = reporting.Table(columns=cols, rows=[[i.get(c) for c in cols] for i in items])
        _emit(table, fmt)
        return 1 if any(i.get("state") == "Failed" for i in items) else 0
    return 2


def _sim_verbs(args, ws, client, fmt) -> int:
    if args.verb == "run":
        config = _load_json(args.file)
        if client:
            out = client.post("/api/simulations", {"name": args.name, "config": config})
            summary = out["summary"]
        else:
            summary = ws.run_simulation(args.name, config)["summary"]
        _emit(reporting.simulation_compare([(args.name, summary)]), fmt)
        return 0
    if args.verb == "compare":
        rows = []
        for name in args.names:
            if client:
                summary = client.get(f"/api/simulations/{name}/summary")["summary"]
            else:
                summary = ws.get_simulation(name)["summary"]
            rows.append((name, summary))
        _emit(reporting.simulation_compare(rows), fmt)
        return 0
    if args.verb == "monthly":
        if client:
            monthly = client.get(f"/api/simulations/{args.name}/monthly")["monthly"]
        else:
            monthly = ws.get_simulation(args.name)["monthly"]
        _emit(reporting.monthly_table(monthly), fmt)
        return 0
    return 2


def _serve(args) -> int:
    from .apiservice import serve_all

    handle = serve_all(args.data_dir, host=args.host, port=args.port,
                       ref_presets=args.ref_preset, studio_dir=args.studio_dir)
    print(f"api: {handle.api_url}")
    for name, url in handle.pipeline_urls.items():
        print(f"pipeline {name}: {url}")
    print("Ctrl-C to stop")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        handle.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
