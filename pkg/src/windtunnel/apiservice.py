"""HTTP API over the workspace: the contract the studio (and any other
client) consumes.

Routes (JSON bodies unless noted; full reference in docs/api.md):

    GET/POST   /api/{kind}                     list / create (kind is plural)
    GET/PUT/DELETE /api/{kind}/{name}          read / new version / tombstone
    POST       /api/experiments/{id}/start     immediate start (409 when the
                                               pipeline is engaged) or
                                               ?queue=true to wait in line
    GET        /api/experiments/{id}/status    live state + sent counters
    GET        /api/experiments/{id}/series    ?stage=&bucket= metric series
    GET        /api/experiments/{id}/report    summary row
    POST       /api/spans  (also /spans)       newline-delimited JSON spans
    POST       /api/billing                    CSV or JSON billing records
    POST       /api/twins/fit                  {name, experiment, kind}
    POST       /api/simulations                {name, config}
    GET        /api/simulations/{id}/summary|monthly|hourly
    POST       /api/traffic/preview            traffic body -> 8760 loads
    GET        /api/traffic/{name}/preview     stored model -> 8760 loads
    GET        /healthz
    GET        /studio/*                       built studio assets

Validation failures return 422 with a machine-readable code and the field
path; engagement conflicts return 409.
"""

from __future__ import annotations

import json
from pathlib import Path

from ._http import HttpError, HttpServer, Request, Response, Router
from .catalog import Kind, UnknownEntityError, ValidationError
from .costing import parse_billing_csv
from .orchestrator import ExperimentSpec
from .telemetry import UnknownExperimentError
from .workspace import KIND_ROUTES, Workspace

_KIND_PATTERN = "|".join(KIND_ROUTES)


def _kind_of(request: Request) -> Kind:
    return KIND_ROUTES[request.params["kind"]]


def _wrap(exc: Exception) -> HttpError:
    if isinstance(exc, ValidationError):
        return HttpError(422, "validation", exc.message, field_path=exc.field)
    if isinstance(exc, (UnknownEntityError, UnknownExperimentError)):
        return HttpError(404, "unknown-entity", str(exc))
    return HttpError(500, "internal", f"{type(exc).__name__}: {exc}")


class ApiService:
    def __init__(self, workspace: Workspace, studio_dir: str | Path | None = None):
        self.ws = workspace
        self.router = Router()
        self._register_routes()
        if studio_dir is not None and Path(studio_dir).is_dir():
            self.router.add_static("/studio", studio_dir)
        self._server: HttpServer | None = None

    # -- lifecycle ---------------------------------------------------------

    def serve(self, host: str = "127.0.0.1", port: int = 0) -> HttpServer:
        self.ws.scheduler.start()
        self._server = HttpServer(self.router, host=host, port=port).start()
        return self._server

    def stop(self) -> None:
        self.ws.scheduler.stop()
        if self._server is not None:
            self._server.stop()

    # -- routes ----------------------------------------------------------------

    def _register_routes(self) -> None:
        add = self.router.add
        add("GET", r"/healthz", lambda req: {"ok": True})
        add("POST", r"/api/spans", self._post_spans)
        add("POST", r"/spans", self._post_spans)
        add("POST", r"/api/billing", self._post_billing)
        add("POST", r"/api/twins/fit", self._post_twin_fit)
        add("POST", r"/api/traffic/preview", self._post_traffic_preview)
        add("GET", r"/api/traffic/(?P<name>[^/]+)/preview", self._get_traffic_preview)
        add("POST", r"/api/simulations", self._post_simulation)
        add("GET", r"/api/simulations/(?P<name>[^/]+)/summary", self._get_sim_summary)
        add("GET", r"/api/simulations/(?P<name>[^/]+)/monthly", self._get_sim_monthly)
        add("GET", r"/api/simulations/(?P<name>[^/]+)/hourly", self._get_sim_hourly)
        add("POST", r"/api/experiments/(?P<name>[^/]+)/start", self._post_experiment_start)
        add("GET", r"/api/experiments/(?P<name>[^/]+)/status", self._get_experiment_status)
        add("GET", r"/api/experiments/(?P<name>[^/]+)/series", self._get_experiment_series)
        add("GET", r"/api/experiments/(?P<name>[^/]+)/report", self._get_experiment_report)
        add("GET", rf"/api/(?P<kind>{_KIND_PATTERN})", self._list_entities)
        add("POST", rf"/api/(?P<kind>{_KIND_PATTERN})", self._create_entity)
        add("GET", rf"/api/(?P<kind>{_KIND_PATTERN})/(?P<name>[^/]+)", self._get_entity)
        add("PUT", rf"/api/(?P<kind>{_KIND_PATTERN})/(?P<name>[^/]+)", self._put_entity)
        add("DELETE", rf"/api/(?P<kind>{_KIND_PATTERN})/(?P<name>[^/]+)", self._delete_entity)

    # -- entity CRUD ----------------------------------------------------------

    def _list_entities(self, req: Request):
        kind = _kind_of(req)
        return {"items": self.ws.list_entities(kind)}

    def _create_entity(self, req: Request):
        kind = _kind_of(req)
        payload = req.json()
        if not isinstance(payload, dict):
            raise HttpError(422, "validation", "body must be a JSON object")
        name = payload.get("name")
        body = payload.get("body", payload)
        if not name and isinstance(body, dict):
            name = body.get("name")
        if not name:
            raise HttpError(422, "validation", "entity name is required", field_path="name")
        return self._store(kind, name, body)

    def _put_entity(self, req: Request):
        kind = _kind_of(req)
        body = req.json()
        if not isinstance(body, dict):
            raise HttpError(422, "validation", "body must be a JSON object")
        return self._store(kind, req.params["name"], body.get("body", body))

    def _store(self, kind: Kind, name: str, body: dict):
        try:
            if kind is Kind.EXPERIMENT:
                spec = ExperimentSpec.from_dict(body.get("spec", body))
                self.ws.orchestrator.submit(spec)
                ref = {"kind": kind.value, "name": spec.name,
                       "version": self.ws.catalog.latest_version(kind, spec.name)}
                return Response.json({"ref": ref}, status=201)
            ref = self.ws.put_entity(kind, name, body)
        except (ValidationError, UnknownEntityError) as exc:
            raise _wrap(exc)
        return Response.json({"ref": ref.to_dict()}, status=201)

    def _get_entity(self, req: Request):
        kind = _kind_of(req)
        version = int(req.query["version"]) if "version" in req.query else None
        try:
            body = self.ws.get_entity(kind, req.params["name"], version)
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"name": req.params["name"], "body": body}

    def _delete_entity(self, req: Request):
        kind = _kind_of(req)
        try:
            self.ws.catalog.delete(kind, req.params["name"])
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"deleted": req.params["name"]}

    # -- spans / billing ----------------------------------------------------------

    def _post_spans(self, req: Request):
        try:
            payload = req.body.decode("utf-8")
        except UnicodeDecodeError:
            raise HttpError(400, "bad-encoding", "span payload must be UTF-8")
        try:
            if req.headers.get("Content-Type", "").startswith("application/json") \
                    and payload.lstrip().startswith("["):
                spans = json.loads(payload)
                accepted = sum(1 for s in spans if self.ws.spans.ingest(s))
            else:
                accepted = self.ws.spans.ingest_lines(payload)
        except (ValidationError, UnknownExperimentError) as exc:
            raise _wrap(exc)
        return {"accepted": accepted}

    def _post_billing(self, req: Request):
        content_type = req.headers.get("Content-Type", "")
        try:
            if content_type.startswith("text/csv"):
                records = parse_billing_csv(req.text())
            else:
                payload = req.json()
                if not isinstance(payload, list):
                    raise HttpError(422, "validation", "expected a JSON array of records")
                records = payload
            stored = self.ws.billing.ingest(records)
        except ValidationError as exc:
            raise _wrap(exc)
        return {"stored": stored}

    # -- twins / traffic / simulations ----------------------------------------------

    def _post_twin_fit(self, req: Request):
        payload = req.json() or {}
        name = payload.get("name")
        experiment = payload.get("experiment")
        if not name or not experiment:
            raise HttpError(422, "validation", "need name and experiment", field_path="name")
        try:
            model = self.ws.fit_twin(name, experiment, payload.get("kind", "simple"))
        except (ValidationError, UnknownEntityError) as exc:
            raise _wrap(exc)
        except Exception as exc:
            raise HttpError(422, "fit-failed", str(exc))
        return {"name": name, "twin": model.to_dict()}

    def _post_traffic_preview(self, req: Request):
        try:
            loads = self.ws.preview_traffic(req.json() or {})
        except ValidationError as exc:
            raise _wrap(exc)
        return {"loads": loads}

    def _get_traffic_preview(self, req: Request):
        try:
            loads = self.ws.preview_traffic(req.params["name"])
        except (ValidationError, UnknownEntityError) as exc:
            raise _wrap(exc)
        return {"loads": loads}

    def _post_simulation(self, req: Request):
        payload = req.json() or {}
        name = payload.get("name")
        if not name:
            raise HttpError(422, "validation", "simulation name is required", field_path="name")
        try:
            out = self.ws.run_simulation(name, payload.get("config", payload))
        except (ValidationError, UnknownEntityError) as exc:
            raise _wrap(exc)
        return Response.json(out, status=201)

    def _get_sim_summary(self, req: Request):
        try:
            sim = self.ws.get_simulation(req.params["name"])
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"name": sim["name"], "summary": sim["summary"]}

    def _get_sim_monthly(self, req: Request):
        try:
            sim = self.ws.get_simulation(req.params["name"])
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"name": sim["name"], "monthly": sim["monthly"]}

    def _get_sim_hourly(self, req: Request):
        try:
            hourly = self.ws.simulation_hourly(req.params["name"])
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"name": req.params["name"], "hourly": hourly}

    # -- experiments ---------------------------------------------------------------

    def _post_experiment_start(self, req: Request):
        name = req.params["name"]
        try:
            doc = self.ws.catalog.get(Kind.EXPERIMENT, name)
        except UnknownEntityError as exc:
            raise _wrap(exc)
        spec = ExperimentSpec.from_dict(doc["spec"])
        queue = req.query.get("queue", "").lower() in ("1", "true", "yes")
        engaged = self.ws.catalog.pipeline_engaged(spec.pipeline.name)
        if engaged and not queue:
            raise HttpError(409, "pipeline-engaged",
                            f"pipeline {spec.pipeline.name!r} is engaged; "
                            "retry later or pass ?queue=true")
        self.ws.scheduler.enqueue(name)
        return {"state": "Pending", "queued": True}

    def _get_experiment_status(self, req: Request):
        try:
            return self.ws.orchestrator.status(req.params["name"])
        except UnknownEntityError as exc:
            raise _wrap(exc)

    def _get_experiment_series(self, req: Request):
        name = req.params["name"]
        stage = req.query.get("stage")
        bucket = float(req.query.get("bucket", 5.0))
        try:
            doc = self.ws.catalog.get(Kind.EXPERIMENT, name)
        except UnknownEntityError as exc:
            raise _wrap(exc)
        origin = doc.get("started_at")
        stages = [stage] if stage else self.ws.spans.stages(name)
        series = {}
        for st in stages:
            s = self.ws.spans.stage_series(name, st, bucket, origin_ts=origin)
            series[st] = {
                "stage": s.stage,
                "bucket_width_s": s.bucket_width_s,
                "buckets": [vars(b) for b in s.buckets],
            }
        return {"name": name, "series": series}

    def _get_experiment_report(self, req: Request):
        name = req.params["name"]
        try:
            doc = self.ws.catalog.get(Kind.EXPERIMENT, name)
        except UnknownEntityError as exc:
            raise _wrap(exc)
        return {"name": name, "state": doc.get("state"), "error": doc.get("error"),
                "result": doc.get("result")}


class ServeHandle:
    """Running API plus any built-in reference pipelines."""

    def __init__(self, workspace: Workspace, api: ApiService, api_server,
                 pipelines: dict[str, tuple]):
        self.workspace = workspace
        self.api = api
        self.api_server = api_server
        self._pipelines = pipelines    # name -> (ReferencePipeline, HttpServer)

    @property
    def api_url(self) -> str:
        return self.api_server.url

    @property
    def pipeline_urls(self) -> dict[str, str]:
        return {name: server.url for name, (_, server) in self._pipelines.items()}

    def stop(self) -> None:
        for pipeline, _server in self._pipelines.values():
            pipeline.stop()
        self.api.stop()


def serve_all(data_dir, host: str = "127.0.0.1", port: int = 0,
              ref_presets: list[str] | None = None,
              studio_dir: str | Path | None = None) -> ServeHandle:
    """Start the API (with scheduler) and optional reference pipelines.

    Each requested preset becomes a registered pipeline entity named
    ``ref-<preset>`` whose spans flow back through the API's /spans
    endpoint, exactly like an external pipeline would.
    """
    from .refpipeline import ReferencePipeline, preset as ref_preset

    workspace = Workspace(data_dir)
    api = ApiService(workspace, studio_dir=studio_dir)
    api_server = api.serve(host=host, port=port)
    pipelines: dict[str, tuple] = {}
    for variant in ref_presets or []:
        pipeline = ReferencePipeline(ref_preset(variant),
                                     span_sink=f"{api_server.url}/spans")
        server = pipeline.serve(host=host)
        name = f"ref-{variant}"
        workspace.put_entity(Kind.PIPELINE, name, {
            "name": name,
            "ingest_endpoint": server.url + "/",
            "metrics_endpoint": f"{api_server.url}/spans",
            "cost_tags": [name],
        })
        pipelines[name] = (pipeline, server)
    return ServeHandle(workspace, api, api_server, pipelines)
