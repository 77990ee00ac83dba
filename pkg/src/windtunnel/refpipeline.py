"""Built-in three-stage pipeline-under-test.

Serves the same ingest and span interfaces as any external pipeline, so
the whole harness can be exercised offline: an unzip stage that fans each
posted archive out into its member files, a parse stage that does the
heavy per-file conversion, and a store stage that loads each parsed file.
Per-stage service times are deterministic constants, which makes simple
queue-theoretic oracles exact in tests; queues between stages are
unbounded FIFOs.

Three presets model one pipeline at different points in its tuning
history. ``no-blocking-write`` is the baseline; ``blocking-write`` adds a
synchronous remote write inside the parse stage (extra_blocking_delay);
``cpu-limited`` is the baseline with the parse stage throttled. Their
bottleneck (parse-stage) capacities, input-referred to posted records, are
1.95, 6.15 and 0.66 records/s.

Span protocol: the root trace id of a posted record is taken verbatim
from ``X-Windtunnel-Record-Index``. The unzip span carries the root id;
fan-out items get child ids ``"<root>/<n>"`` with parent_trace_id set to
the root, so downstream spans stay unique per (trace, stage).
"""

from __future__ import annotations

import io
import json
import queue
import threading
import time
import zipfile
from dataclasses import dataclass
from typing import Callable

import requests

from ._http import HttpError, HttpServer, Request, Response, Router
from .catalog import ValidationError
from .telemetry import SpanRecord

VARIANTS = ("blocking-write", "no-blocking-write", "cpu-limited")

_FAN_OUT = 5
# parse-stage per-item times that put the input-referred capacities at
# exactly 6.15, 1.95 and 0.66 records/s
_PARSE_ITEM_S = 1.0 / (6.15 * _FAN_OUT)
_BLOCKING_DELAY_S = 1.0 / (1.95 * _FAN_OUT) - _PARSE_ITEM_S
_PARSE_ITEM_THROTTLED_S = 1.0 / (0.66 * _FAN_OUT)
# residual of the baseline's 0.06 s no-queueing latency, split 1:2
_RESIDUAL_S = 0.06 - _PARSE_ITEM_S
_UNZIP_S = _RESIDUAL_S / 3.0
_STORE_ITEM_S = 2.0 * _RESIDUAL_S / 3.0


@dataclass
class StageConfig:
    name: str
    service_time_s_per_item: float
    concurrency: int = 1
    fan_out: int = 1
    extra_blocking_delay_s: float = 0.0

    def __post_init__(self):
        if self.service_time_s_per_item <= 0:
            raise ValidationError("service_time_s_per_item must be > 0", self.name)
        if self.concurrency < 1 or self.fan_out < 1:
            raise ValidationError("concurrency and fan_out must be >= 1", self.name)
        if self.extra_blocking_delay_s < 0:
            raise ValidationError("extra_blocking_delay_s must be >= 0", self.name)

    @property
    def item_time_s(self) -> float:
        return self.service_time_s_per_item + self.extra_blocking_delay_s


def preset(variant: str) -> list[StageConfig]:
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    parse_time = _PARSE_ITEM_THROTTLED_S if variant == "cpu-limited" else _PARSE_ITEM_S
    blocking = _BLOCKING_DELAY_S if variant == "blocking-write" else 0.0
    return [
        StageConfig(name="unzip", service_time_s_per_item=_UNZIP_S, fan_out=_FAN_OUT),
        StageConfig(name="parse", service_time_s_per_item=parse_time,
                    extra_blocking_delay_s=blocking),
        StageConfig(name="store", service_time_s_per_item=_STORE_ITEM_S),
    ]


def input_referred_capacity(configs: list[StageConfig]) -> list[float]:
    """Each stage's capacity in posted records/s, accounting for upstream
    fan-out multiplying the items a stage must handle per record."""
    out = []
    multiplicity = 1
    for cfg in configs:
        out.append(cfg.concurrency / (multiplicity * cfg.item_time_s))
        multiplicity *= cfg.fan_out
    return out


def pipeline_capacity(configs: list[StageConfig]) -> float:
    return min(input_referred_capacity(configs))


@dataclass
class _Item:
    root: str
    trace: str
    experiment_id: str
    payload: bytes | None = None


_STOP = object()


class _SpanEmitter:
    """Fire-and-forget span delivery; never blocks stage workers.

    The sink is either a callable (in-process telemetry) or a URL, in
    which case spans are batched into newline-delimited JSON POSTs.
    """

    def __init__(self, sink: Callable[[SpanRecord], None] | str,
                 batch_window_s: float = 0.2):
        self._sink = sink
        self._queue: queue.Queue = queue.Queue()
        self._window = batch_window_s
        self._thread = threading.Thread(target=self._run, name="span-emitter", daemon=True)
        self._thread.start()

    def emit(self, span: SpanRecord) -> None:
        self._queue.put(span)

    def _run(self) -> None:
        session = requests.Session()
        while True:
            span = self._queue.get()
            if span is _STOP:
                self._queue.task_done()
                return
            batch = [span]
            stop = False
            deadline = time.monotonic() + self._window
            while True:
                timeout = deadline - time.monotonic()
                if timeout <= 0:
                    break
                try:
                    nxt = self._queue.get(timeout=timeout)
                except queue.Empty:
                    break
                if nxt is _STOP:
                    stop = True
                    break
                batch.append(nxt)
            self._flush(session, batch)
            # task_done only after the flush so join() means "delivered"
            for _ in batch:
                self._queue.task_done()
            if stop:
                self._queue.task_done()
                return

    def _flush(self, session: requests.Session, batch: list[SpanRecord]) -> None:
        if callable(self._sink):
            for span in batch:
                try:
                    self._sink(span)
                except Exception:
                    pass
            return
        body = "\n".join(json.dumps(s.to_dict()) for s in batch)
        try:
            session.post(self._sink, data=body.encode("utf-8"),
                         headers={"Content-Type": "application/x-ndjson"}, timeout=10)
        except requests.RequestException:
            pass

    def close(self) -> None:
        self._queue.put(_STOP)
        self._thread.join(timeout=10)

    def drain(self) -> None:
        """Block until every queued span has actually been delivered."""
        self._queue.join()


class ReferencePipeline:
    """Stage workers wired through unbounded FIFO queues."""

    def __init__(self, configs: list[StageConfig],
                 span_sink: Callable[[SpanRecord], None] | str,
                 actually_unzip: bool = False):
        self.configs = configs
        self.actually_unzip = actually_unzip
        self._emitter = _SpanEmitter(span_sink)
        self._queues: list[queue.Queue] = [queue.Queue() for _ in configs]
        self._threads: list[threading.Thread] = []
        self._accepted = 0
        self._processed = [0] * len(configs)
        self._count_lock = threading.Lock()
        self._server: HttpServer | None = None
        self._running = False

    # -- lifecycle -------------------------------------------------------

    def start(self) -> "ReferencePipeline":
        self._running = True
        for i, cfg in enumerate(self.configs):
            for w in range(cfg.concurrency):
                t = threading.Thread(target=self._worker, args=(i,),
                                     name=f"stage-{cfg.name}-{w}", daemon=True)
                t.start()
                self._threads.append(t)
        return self

    def stop(self) -> None:
        self._running = False
        for i, cfg in enumerate(self.configs):
            for _ in range(cfg.concurrency):
                self._queues[i].put(_STOP)
        for t in self._threads:
            t.join(timeout=10)
        self._emitter.close()
        if self._server is not None:
            self._server.stop()

    # -- ingress -----------------------------------------------------------

    def ingest(self, payload: bytes, record_index: str, experiment_id: str) -> None:
        if not payload:
            raise ValidationError("empty payload")
        with self._count_lock:
            self._accepted += 1
        self._queues[0].put(_Item(root=record_index, trace=record_index,
                                  experiment_id=experiment_id, payload=payload))

    def serve(self, host: str = "127.0.0.1", port: int = 0) -> HttpServer:
        """Expose POST / for ingest and GET /healthz; returns the server."""
        router = Router()
        anon_counter = iter(range(10**12))

        def handle_ingest(req: Request):
            if not req.body:
                raise HttpError(400, "empty-payload", "ingest requires a request body")
            index = req.headers.get("X-Windtunnel-Record-Index") or f"anon-{next(anon_counter)}"
            experiment = req.headers.get("X-Windtunnel-Experiment") or "adhoc"
            self.ingest(req.body, index, experiment)
            return Response.json({"accepted": True}, status=200)

        router.add("POST", r"/.*", handle_ingest)
        router.add("GET", r"/healthz", lambda req: {"ok": True})
        router.add("GET", r"/.*", lambda req: {"ok": True})
        self._server = HttpServer(router, host=host, port=port).start()
        self.start()
        return self._server

    # -- stage machinery ---------------------------------------------------

    def _worker(self, stage_index: int) -> None:
        cfg = self.configs[stage_index]
        q = self._queues[stage_index]
        while True:
            item = q.get()
            if item is _STOP:
                return
            start = time.time()
            time.sleep(cfg.item_time_s)
            duration = time.time() - start
            self._emitter.emit(SpanRecord(
                experiment_id=item.experiment_id,
                trace_id=item.trace,
                stage=cfg.name,
                start_ts=start,
                duration_s=duration,
                parent_trace_id=item.root if item.trace != item.root else None,
            ))
            with self._count_lock:
                self._processed[stage_index] += 1
            if stage_index + 1 < len(self.configs):
                for child in self._fan_out_items(cfg, item):
                    self._queues[stage_index + 1].put(child)

    def _fan_out_items(self, cfg: StageConfig, item: _Item) -> list[_Item]:
        fan_out = cfg.fan_out
        if self.actually_unzip and item.payload is not None:
            try:
                with zipfile.ZipFile(io.BytesIO(item.payload)) as zf:
                    fan_out = max(len(zf.namelist()), 1)
            except zipfile.BadZipFile:
                fan_out = 1
        if fan_out == 1:
            return [_Item(root=item.root, trace=item.trace, experiment_id=item.experiment_id)]
        return [_Item(root=item.root, trace=f"{item.trace}/{j}", experiment_id=item.experiment_id)
                for j in range(fan_out)]

    # -- introspection -----------------------------------------------------

    def queue_depths(self) -> list[int]:
        return [q.qsize() for q in self._queues]

    def counts(self) -> dict:
        with self._count_lock:
            return {"accepted": self._accepted,
                    "processed": {cfg.name: n for cfg, n in zip(self.configs, self._processed)}}

    def idle(self) -> bool:
        return all(q.empty() for q in self._queues) and self._emitter._queue.empty()

    def wait_idle(self, timeout_s: float = 60.0) -> bool:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            if self.idle():
                # one service interval of grace so in-flight items finish
                time.sleep(max(cfg.item_time_s for cfg in self.configs) + 0.05)
                if self.idle():
                    return True
            time.sleep(0.02)
        return False
