"""Experiment lifecycle: engage, probe, send, drain, summarize.

An experiment is one run of one load pattern against one pipeline. The
state machine is Pending -> Running -> Draining -> Completed, with Failed
reachable from Pending and Running (validation or probe failures, or a
run that never got a byte through) and from Draining when the drain
reveals that no sent record can be joined to a final-stage span.

Draining is a real state, not a detail: it separates "the load generator
has finished sending" from "the pipeline has finished processing", and
the interval between the two is exactly the drain the capacity analysis
needs. While an experiment is Running or Draining its pipeline stays
engaged, so a second experiment against the same pipeline waits its turn;
experiments against other pipelines proceed in parallel.

Every state transition appends a new version of the experiment document
to the catalog, so the full history of a run stays reviewable.
"""

from __future__ import annotations

import statistics
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import datagen, loadgen
from .catalog import Catalog, EntityRef, Kind, UnknownEntityError, ValidationError
from .costing import BillingStore, parse_rfc3339
from .loadgen import LoadPattern, ProbeError, SendLog
from .telemetry import DEFAULT_IDLE_TIMEOUT_S, SpanStore

STATES = ("Pending", "Running", "Draining", "Completed", "Failed")

_ALLOWED_TRANSITIONS = {
    ("Pending", "Running"),
    ("Running", "Draining"),
    ("Draining", "Completed"),
    ("Pending", "Failed"),
    ("Running", "Failed"),
    # extension: a zero-joinable run is only discoverable after draining
    ("Draining", "Failed"),
}


class NoJoinableRecordsError(Exception):
    pass


@dataclass
class ExperimentSpec:
    name: str
    pipeline: EntityRef
    dataset: EntityRef
    load_pattern: EntityRef
    scheduled_at: float | None = None
    drain_idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S

    @classmethod
    def from_dict(cls, body: dict) -> "ExperimentSpec":
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("name must be a nonempty string", "name")
        pipeline = EntityRef.from_dict(body.get("pipeline", {}), "pipeline")
        dataset = EntityRef.from_dict(body.get("dataset", {}), "dataset")
        pattern = EntityRef.from_dict(body.get("load_pattern", {}), "load_pattern")
        for ref, expect, fname in ((pipeline, Kind.PIPELINE, "pipeline"),
                                   (dataset, Kind.DATASET, "dataset"),
                                   (pattern, Kind.LOADPATTERN, "load_pattern")):
            if ref.kind is not expect:
                raise ValidationError(f"must reference a {expect.value}", f"{fname}.kind")
        scheduled = body.get("scheduled_at")
        if scheduled is not None:
            scheduled = parse_rfc3339(scheduled)
        idle = body.get("drain_idle_timeout_s", DEFAULT_IDLE_TIMEOUT_S)
        if not isinstance(idle, (int, float)) or idle <= 0:
            raise ValidationError("drain_idle_timeout_s must be > 0", "drain_idle_timeout_s")
        return cls(name=name, pipeline=pipeline, dataset=dataset, load_pattern=pattern,
                   scheduled_at=scheduled, drain_idle_timeout_s=float(idle))

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "pipeline": self.pipeline.to_dict(),
            "dataset": self.dataset.to_dict(),
            "load_pattern": self.load_pattern.to_dict(),
            "drain_idle_timeout_s": self.drain_idle_timeout_s,
        }
        if self.scheduled_at is not None:
            d["scheduled_at"] = self.scheduled_at
        return d


@dataclass
class ExperimentResult:
    state: str
    started_at: float
    duration_s: float
    records_sent: int
    mean_throughput_rps: float
    mean_latency_s: float
    median_latency_s: float
    total_cost_minor: int
    cost_rate_minor_per_hr: float
    unjoined_records: int = 0

    def to_dict(self) -> dict:
        return {
            "state": self.state,
            "started_at": self.started_at,
            "duration_s": self.duration_s,
            "records_sent": self.records_sent,
            "mean_throughput_rps": self.mean_throughput_rps,
            "mean_latency_s": self.mean_latency_s,
            "median_latency_s": self.median_latency_s,
            "total_cost_minor": self.total_cost_minor,
            "cost_rate_minor_per_hr": self.cost_rate_minor_per_hr,
            "unjoined_records": self.unjoined_records,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentResult":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})  # type: ignore[arg-type]


@dataclass
class _LiveRun:
    state: str = "Pending"
    planned: int = 0
    sent: int = 0
    started_at: float | None = None
    error: str | None = None


class Orchestrator:
    def __init__(self, catalog: Catalog, span_store: SpanStore, billing: BillingStore,
                 data_dir: str | Path, poll_interval_s: float = 0.25):
        self.catalog = catalog
        self.spans = span_store
        self.billing = billing
        self.data_dir = Path(data_dir)
        self.poll_interval_s = poll_interval_s
        self._live: dict[str, _LiveRun] = {}
        self._live_lock = threading.Lock()

    # -- document plumbing --------------------------------------------------

    def _doc(self, name: str) -> dict:
        return self.catalog.get(Kind.EXPERIMENT, name)

    def _write_doc(self, name: str, doc: dict) -> None:
        self.catalog.put(Kind.EXPERIMENT, name, doc, validate=False)

    def _set_state(self, name: str, new_state: str, error: str | None = None,
                   result: ExperimentResult | None = None,
                   started_at: float | None = None) -> dict:
        doc = dict(self._doc(name))
        old = doc.get("state", "Pending")
        if (old, new_state) not in _ALLOWED_TRANSITIONS and old != new_state:
            raise ValidationError(f"illegal transition {old} -> {new_state}")
        doc["state"] = new_state
        if error is not None:
            doc["error"] = error
        if result is not None:
            doc["result"] = result.to_dict()
        if started_at is not None:
            doc["started_at"] = started_at
        self._write_doc(name, doc)
        with self._live_lock:
            live = self._live.setdefault(name, _LiveRun())
            live.state = new_state
            live.error = error or live.error
            if started_at is not None:
                live.started_at = started_at
        self.spans.set_state(name, new_state)
        return doc

    # -- submission -----------------------------------------------------------

    def submit(self, spec: ExperimentSpec | dict) -> str:
        """Record the experiment; unresolvable references fail it on the spot."""
        if isinstance(spec, dict):
            spec = ExperimentSpec.from_dict(spec)
        doc = {"spec": spec.to_dict(), "state": "Pending", "error": None,
               "started_at": None, "result": None}
        error = None
        for ref, kind in ((spec.pipeline, Kind.PIPELINE), (spec.dataset, Kind.DATASET),
                          (spec.load_pattern, Kind.LOADPATTERN)):
            if not self.catalog.exists(kind, ref.name):
                error = f"{kind.value}/{ref.name} does not exist"
                break
        if error:
            doc["state"] = "Failed"
            doc["error"] = error
        self.catalog.put(Kind.EXPERIMENT, spec.name, doc, validate=False)
        with self._live_lock:
            self._live[spec.name] = _LiveRun(state=doc["state"], error=error)
        return spec.name

    # -- dataset materialization ------------------------------------------------

    def build_or_load_dataset(self, ref: EntityRef) -> datagen.DataSet:
        body = self.catalog.resolve(ref)
        spec = datagen.DataSetSpec.from_dict(body)
        version = ref.version or self.catalog.latest_version(Kind.DATASET, ref.name)
        out_dir = self.data_dir / "datasets" / f"{ref.name}-v{version}"
        if (out_dir / "manifest.json").exists():
            return datagen.DataSet.load(out_dir)
        schema = datagen.SchemaSpec.from_dict(self.catalog.resolve(spec.schema))
        dataset = datagen.build_dataset(spec, schema)
        dataset.write(out_dir)
        return dataset

    # -- the run ------------------------------------------------------------------

    def run(self, name: str, engage_timeout_s: float | None = None) -> ExperimentResult | None:
        """Drive one experiment to Completed/Failed; blocks the caller.

        Waits for the pipeline to become free (queued behind the current
        experiment) and for scheduled_at when set. Returns the result, or
        None when the experiment failed before producing one.
        """
        doc = self._doc(name)
        if doc.get("state") == "Failed":
            return None
        spec = ExperimentSpec.from_dict(doc["spec"])

        try:
            pipeline_body = self.catalog.resolve(spec.pipeline)
            pattern = LoadPattern.from_dict(self.catalog.resolve(spec.load_pattern))
            dataset = self.build_or_load_dataset(spec.dataset)
        except (UnknownEntityError, ValidationError) as exc:
            self._set_state(name, "Failed", error=str(exc))
            return None

        plan_total = loadgen.total_count(pattern)
        with self._live_lock:
            self._live.setdefault(name, _LiveRun()).planned = plan_total

        if spec.scheduled_at is not None:
            delay = spec.scheduled_at - time.time()
            if delay > 0:
                time.sleep(delay)

        deadline = None if engage_timeout_s is None else time.monotonic() + engage_timeout_s
        while not self.catalog.engage(spec.pipeline.name, holder=name):
            if deadline is not None and time.monotonic() > deadline:
                self._set_state(name, "Failed", error="pipeline engagement timed out")
                return None
            time.sleep(self.poll_interval_s)

        try:
            endpoint = pipeline_body["ingest_endpoint"]
            try:
                loadgen.probe_endpoint(endpoint)
            except ProbeError as exc:
                self._set_state(name, "Failed", error=str(exc))
                return None

            started = time.time()
            self._set_state(name, "Running", started_at=started)
            self.spans.register_experiment(name, "Running")

            def on_sent(count: int) -> None:
                with self._live_lock:
                    self._live[name].sent = count

            send_log = loadgen.run_load(
                dataset.payload_bytes(), pattern, endpoint, experiment_id=name,
                content_type=dataset.content_type, probe=False, on_sent=on_sent)
            self._save_send_log(name, send_log)

            if send_log.ok_count() == 0:
                self._set_state(name, "Failed", error="no send reached the pipeline")
                return None

            self._set_state(name, "Draining")
            sending_finished = send_log.finished_at or time.time()
            while not self.spans.detect_completion(
                    name, spec.drain_idle_timeout_s, fallback_ts=sending_finished):
                time.sleep(self.poll_interval_s)

            try:
                result = self._compute_result(name, spec, pipeline_body, send_log)
            except NoJoinableRecordsError as exc:
                self._set_state(name, "Failed", error=str(exc))
                return None
            self._set_state(name, "Completed", result=result)
            return result
        finally:
            self.catalog.release(spec.pipeline.name, holder=name)

    # -- results ------------------------------------------------------------------

    def _send_log_path(self, name: str) -> Path:
        return self.data_dir / "sendlogs" / f"{name}.csv"

    def _save_send_log(self, name: str, log: SendLog) -> None:
        path = self._send_log_path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(log.to_csv(), encoding="utf-8")

    def load_send_log(self, name: str) -> SendLog:
        path = self._send_log_path(name)
        if not path.exists():
            raise UnknownEntityError(f"experiment {name} has no send log")
        return SendLog.from_csv(path.read_text(encoding="utf-8"), experiment_id=name)

    def _compute_result(self, name: str, spec: ExperimentSpec, pipeline_body: dict,
                        send_log: SendLog) -> ExperimentResult:
        samples, unjoined = self.spans.end_to_end_latency(name, send_log)
        if not samples:
            raise NoJoinableRecordsError(
                f"no record reached the final stage ({unjoined} unjoined)")
        first_send = send_log.first_send_wall()
        last_end = self.spans.max_final_stage_end(name)
        duration = last_end - first_send
        if duration <= 0:
            raise NoJoinableRecordsError("experiment window is empty")
        latencies = [lat for _, lat in samples]
        records_sent = len(send_log.entries)
        tags = pipeline_body.get("cost_tags", [])
        total_cost = int(round(self.billing.experiment_cost(tags, first_send, last_end)))
        return ExperimentResult(
            state="Completed",
            started_at=first_send,
            duration_s=duration,
            records_sent=records_sent,
            mean_throughput_rps=records_sent / duration,
            mean_latency_s=statistics.fmean(latencies),
            median_latency_s=statistics.median(latencies),
            total_cost_minor=total_cost,
            cost_rate_minor_per_hr=total_cost * 3600.0 / duration,
            unjoined_records=unjoined,
        )

    def finalize(self, name: str) -> ExperimentResult:
        """Recompute the result from stored artifacts; idempotent."""
        doc = self._doc(name)
        spec = ExperimentSpec.from_dict(doc["spec"])
        pipeline_body = self.catalog.resolve(spec.pipeline)
        send_log = self.load_send_log(name)
        result = self._compute_result(name, spec, pipeline_body, send_log)
        if doc.get("result") != result.to_dict() or doc.get("state") != "Completed":
            self._set_state(name, "Completed", result=result)
        return result

    # -- status ---------------------------------------------------------------------

    def status(self, name: str) -> dict:
        doc = self._doc(name)
        out = {
            "name": name,
            "state": doc.get("state", "Pending"),
            "error": doc.get("error"),
            "started_at": doc.get("started_at"),
            "result": doc.get("result"),
            "stages": self.spans.stages(name),
            "span_count": self.spans.span_count(name),
        }
        with self._live_lock:
            live = self._live.get(name)
            if live is not None:
                out["sent"] = live.sent
                out["planned"] = live.planned
                if live.state in ("Running", "Draining"):
                    out["state"] = live.state
        return out


class Scheduler:
    """Background dispatcher: starts due experiments, keeping per-pipeline
    FIFO order while letting different pipelines run concurrently."""

    def __init__(self, orchestrator: Orchestrator, poll_s: float = 0.2):
        self.orchestrator = orchestrator
        self.poll_s = poll_s
        self._queue: list[str] = []
        self._in_flight: set[str] = set()
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def submit(self, spec: ExperimentSpec | dict) -> str:
        name = self.orchestrator.submit(spec)
        self.enqueue(name)
        return name

    def enqueue(self, name: str) -> None:
        """Queue an already-submitted experiment for dispatch."""
        state = self.orchestrator.catalog.get(Kind.EXPERIMENT, name).get("state")
        if state != "Pending":
            return
        with self._lock:
            if name not in self._queue and name not in self._in_flight:
                self._queue.append(name)

    def start(self) -> "Scheduler":
        self._thread = threading.Thread(target=self._loop, name="experiment-scheduler",
                                        daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def _loop(self) -> None:
        while not self._stop.wait(self.poll_s):
            self._dispatch_due()

    def _dispatch_due(self) -> None:
        with self._lock:
            queued = list(self._queue)
        claimed_pipelines = set()
        for name in queued:
            try:
                doc = self.orchestrator.catalog.get(Kind.EXPERIMENT, name)
                spec = ExperimentSpec.from_dict(doc["spec"])
            except (UnknownEntityError, ValidationError):
                with self._lock:
                    self._queue.remove(name)
                continue
            pipeline = spec.pipeline.name
            if pipeline in claimed_pipelines:
                continue
            claimed_pipelines.add(pipeline)  # FIFO per pipeline: only the head may start
            if self.orchestrator.catalog.pipeline_engaged(pipeline):
                continue
            if spec.scheduled_at is not None and spec.scheduled_at > time.time():
                continue
            with self._lock:
                if name in self._in_flight:
                    continue
                self._in_flight.add(name)
                self._queue.remove(name)
            threading.Thread(target=self._run_one, args=(name,),
                             name=f"experiment-{name}", daemon=True).start()

    def _run_one(self, name: str) -> None:
        try:
            self.orchestrator.run(name)
        finally:
            with self._lock:
                self._in_flight.discard(name)
