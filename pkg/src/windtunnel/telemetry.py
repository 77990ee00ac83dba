"""Span collection and per-stage metric derivation.

Instrumented pipelines report one span per (item, stage): wall-clock start
time plus duration. Spans POSTed as JSON lines land in an append-only file
per experiment and an in-memory index. Ingestion is idempotent on
(trace_id, stage) so retried deliveries never double-count.

Trace identity carries the join back to the load generator: the root of a
span is its ``parent_trace_id`` when present, else its ``trace_id``, and
pipelines are expected to use the ``X-Windtunnel-Record-Index`` header
value as that root. Fan-out stages give each derived item its own child
trace id (``"<root>/<n>"``) so sibling spans in the same stage stay
distinct under the idempotency rule.

Span timestamps are wall-clock from the pipeline host while send times
come from the load generator's host; end-to-end latency therefore absorbs
any clock skew between the two. NTP-level skew (milliseconds) is assumed
and is a known measurement-error source at sub-second latencies.

The *final stage* of an experiment is inferred from span topology (see
``final_stage``; an explicit stage name can override the inference). Completion is declared once no new final-stage span has
arrived for an idle timeout — counting sent vs processed records cannot
work in general because stages may split or join records.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .catalog import ValidationError
from .loadgen import SendLog

DEFAULT_BUCKET_WIDTH_S = 5.0
DEFAULT_IDLE_TIMEOUT_S = 30.0

ACTIVE_STATES = ("Running", "Draining")


class UnknownExperimentError(Exception):
    pass


@dataclass(frozen=True)
class SpanRecord:
    experiment_id: str
    trace_id: str
    stage: str
    start_ts: float
    duration_s: float
    parent_trace_id: str | None = None

    @property
    def end_ts(self) -> float:
        return self.start_ts + self.duration_s

    @property
    def root_trace_id(self) -> str:
        return self.parent_trace_id if self.parent_trace_id else self.trace_id

    @classmethod
    def from_dict(cls, d: dict) -> "SpanRecord":
        exp = d.get("experiment_id")
        if not isinstance(exp, str) or not exp:
            raise ValidationError("experiment_id must be a nonempty string", "experiment_id")
        trace = d.get("trace_id")
        if not isinstance(trace, str) or not trace:
            raise ValidationError("trace_id must be a nonempty string", "trace_id")
        stage = d.get("stage")
        if not isinstance(stage, str) or not stage:
            raise ValidationError("stage must be a nonempty string", "stage")
        start = d.get("start_ts")
        if not isinstance(start, (int, float)) or not math.isfinite(start):
            raise ValidationError("start_ts must be a finite number", "start_ts")
        duration = d.get("duration_s")
        if not isinstance(duration, (int, float)) or not math.isfinite(duration) or duration < 0:
            raise ValidationError("duration_s must be a finite number >= 0", "duration_s")
        parent = d.get("parent_trace_id")
        if parent is not None and (not isinstance(parent, str) or not parent):
            raise ValidationError("parent_trace_id must be a nonempty string when present",
                                  "parent_trace_id")
        return cls(experiment_id=exp, trace_id=trace, stage=stage,
                   start_ts=float(start), duration_s=float(duration), parent_trace_id=parent)

    def to_dict(self) -> dict:
        d = {"experiment_id": self.experiment_id, "trace_id": self.trace_id,
             "stage": self.stage, "start_ts": self.start_ts, "duration_s": self.duration_s}
        if self.parent_trace_id:
            d["parent_trace_id"] = self.parent_trace_id
        return d


@dataclass
class MetricBucket:
    t0: float
    count: int
    rate_rps: float
    latency_mean_s: float
    latency_p50_s: float
    latency_p95_s: float


@dataclass
class MetricSeries:
    stage: str
    bucket_width_s: float
    buckets: list[MetricBucket] = field(default_factory=list)

    def total_count(self) -> int:
        return sum(b.count for b in self.buckets)


def _percentile(sorted_values: list[float], q: float) -> float:
    """Linear-interpolation percentile of an already-sorted list."""
    if not sorted_values:
        return 0.0
    if len(sorted_values) == 1:
        return sorted_values[0]
    pos = q * (len(sorted_values) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = pos - lo
    return sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac


class _ExperimentSpans:
    def __init__(self):
        self.spans: list[SpanRecord] = []
        self.seen: set[tuple[str, str]] = set()
        self.last_arrival: dict[str, float] = {}     # stage -> ingest wall time
        self.max_end: dict[str, float] = {}          # stage -> latest span end


class SpanStore:
    """Append-only span storage with per-experiment indexes.

    ``state_lookup`` (experiment_id -> state string or None) gates
    ingestion: spans are only accepted while the experiment is Running or
    Draining. Experiments can also be registered directly, which is what
    the orchestrator does for live runs.
    """

    def __init__(self, data_dir: str | Path | None = None,
                 state_lookup: Callable[[str], str | None] | None = None):
        self._dir = Path(data_dir) / "spans" if data_dir is not None else None
        if self._dir is not None:
            self._dir.mkdir(parents=True, exist_ok=True)
        self._state_lookup = state_lookup
        self._states: dict[str, str] = {}
        self._data: dict[str, _ExperimentSpans] = {}
        self._lock = threading.RLock()

    # -- experiment registry ------------------------------------------------

    def register_experiment(self, experiment_id: str, state: str = "Running") -> None:
        with self._lock:
            self._states[experiment_id] = state

    def set_state(self, experiment_id: str, state: str) -> None:
        with self._lock:
            self._states[experiment_id] = state

    def _state_of(self, experiment_id: str) -> str | None:
        state = self._states.get(experiment_id)
        if state is None and self._state_lookup is not None:
            state = self._state_lookup(experiment_id)
        return state

    def _bucket_for(self, experiment_id: str) -> _ExperimentSpans:
        data = self._data.get(experiment_id)
        if data is None:
            data = _ExperimentSpans()
            self._data[experiment_id] = data
            if self._dir is not None:
                path = self._dir / f"{experiment_id}.jsonl"
                if path.exists():
                    for line in path.read_text(encoding="utf-8").splitlines():
                        if line.strip():
                            span = SpanRecord.from_dict(json.loads(line))
                            self._index(data, span, arrival_ts=span.end_ts)
        return data

    def _index(self, data: _ExperimentSpans, span: SpanRecord, arrival_ts: float) -> bool:
        key = (span.trace_id, span.stage)
        if key in data.seen:
            return False
        data.seen.add(key)
        data.spans.append(span)
        data.last_arrival[span.stage] = arrival_ts
        if span.end_ts > data.max_end.get(span.stage, float("-inf")):
            data.max_end[span.stage] = span.end_ts
        return True

    # -- ingestion ------------------------------------------------------------

    def ingest(self, span: SpanRecord | dict) -> bool:
        """Store one span; returns False when it was a duplicate."""
        if isinstance(span, dict):
            span = SpanRecord.from_dict(span)
        with self._lock:
            state = self._state_of(span.experiment_id)
            if state is None:
                raise UnknownExperimentError(f"unknown experiment {span.experiment_id!r}")
            if state not in ACTIVE_STATES:
                raise UnknownExperimentError(
                    f"experiment {span.experiment_id!r} is {state}, not accepting spans")
            data = self._bucket_for(span.experiment_id)
            fresh = self._index(data, span, arrival_ts=time.time())
            if fresh and self._dir is not None:
                path = self._dir / f"{span.experiment_id}.jsonl"
                with path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(span.to_dict(), sort_keys=True) + "\n")
            return fresh

    def ingest_lines(self, text: str) -> int:
        """Ingest newline-delimited JSON spans; returns accepted count."""
        accepted = 0
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed span line: {exc}") from exc
            if self.ingest(payload):
                accepted += 1
        return accepted

    # -- queries ---------------------------------------------------------------

    def spans(self, experiment_id: str) -> list[SpanRecord]:
        with self._lock:
            return list(self._bucket_for(experiment_id).spans)

    def span_count(self, experiment_id: str) -> int:
        with self._lock:
            return len(self._bucket_for(experiment_id).spans)

    def stages(self, experiment_id: str) -> list[str]:
        """Stage names in order of first appearance."""
        out: list[str] = []
        for span in self.spans(experiment_id):
            if span.stage not in out:
                out.append(span.stage)
        return out

    def final_stage(self, experiment_id: str) -> str | None:
        """Infer the pipeline's last stage from span topology.

        Within one record's trace, a downstream stage always starts after
        the upstream stage that fed it, so the stage with the largest mean
        start offset (relative to the record's first span) is the final
        one. This stays correct even when the latest arriving spans belong
        to records that never finished.
        """
        spans = self.spans(experiment_id)
        if not spans:
            return None
        root_first: dict[str, float] = {}
        for s in spans:
            root = s.root_trace_id
            if s.start_ts < root_first.get(root, float("inf")):
                root_first[root] = s.start_ts
        offset_sum: dict[str, float] = {}
        offset_n: dict[str, int] = {}
        for s in spans:
            offset = s.start_ts - root_first[s.root_trace_id]
            offset_sum[s.stage] = offset_sum.get(s.stage, 0.0) + offset
            offset_n[s.stage] = offset_n.get(s.stage, 0) + 1
        return max(offset_sum, key=lambda stage: offset_sum[stage] / offset_n[stage])

    def stage_series(self, experiment_id: str, stage: str,
                     bucket_width_s: float = DEFAULT_BUCKET_WIDTH_S,
                     origin_ts: float | None = None) -> MetricSeries:
        """Bucketed throughput/latency for one stage.

        Spans belong to the bucket containing their start_ts. Buckets run
        contiguously from the origin (experiment start when known, else
        the earliest span) through the last span.
        """
        spans = [s for s in self.spans(experiment_id) if s.stage == stage]
        series = MetricSeries(stage=stage, bucket_width_s=bucket_width_s)
        if not spans:
            return series
        if origin_ts is None:
            origin_ts = min(s.start_ts for s in spans)
        n_buckets = max(int((max(s.start_ts for s in spans) - origin_ts) // bucket_width_s) + 1, 1)
        grouped: list[list[float]] = [[] for _ in range(n_buckets)]
        for s in spans:
            idx = int((s.start_ts - origin_ts) // bucket_width_s)
            if 0 <= idx < n_buckets:
                grouped[idx].append(s.duration_s)
        for i, durations in enumerate(grouped):
            durations.sort()
            count = len(durations)
            series.buckets.append(MetricBucket(
                t0=i * bucket_width_s,
                count=count,
                rate_rps=count / bucket_width_s,
                latency_mean_s=(sum(durations) / count) if count else 0.0,
                latency_p50_s=_percentile(durations, 0.50),
                latency_p95_s=_percentile(durations, 0.95),
            ))
        return series

    # -- end-to-end ----------------------------------------------------------

    def end_to_end_latency(self, experiment_id: str, send_log: SendLog,
                           final_stage: str | None = None
                           ) -> tuple[list[tuple[int, float]], int]:
        """Per-record latencies: final-stage span end minus send time.

        Returns (samples, unjoined_count). A record is unjoined when no
        final-stage span shares its root trace id; such records are counted
        but excluded from the samples.
        """
        if final_stage is None:
            final_stage = self.final_stage(experiment_id)
        final_end_by_root: dict[str, float] = {}
        for span in self.spans(experiment_id):
            if span.stage != final_stage:
                continue
            root = span.root_trace_id
            if span.end_ts > final_end_by_root.get(root, float("-inf")):
                final_end_by_root[root] = span.end_ts
        samples: list[tuple[int, float]] = []
        unjoined = 0
        for entry in send_log.entries:
            if entry.wall_ts is None:
                unjoined += 1
                continue
            end = final_end_by_root.get(str(entry.record_index))
            if end is None:
                unjoined += 1
            else:
                samples.append((entry.record_index, end - entry.wall_ts))
        return samples, unjoined

    # -- completion ------------------------------------------------------------

    def last_arrival(self, experiment_id: str, stage: str | None = None) -> float | None:
        with self._lock:
            arrivals = self._bucket_for(experiment_id).last_arrival
            if stage is not None:
                return arrivals.get(stage)
            return max(arrivals.values()) if arrivals else None

    def detect_completion(self, experiment_id: str, idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
                          now: float | None = None,
                          fallback_ts: float | None = None,
                          final_stage: str | None = None) -> bool:
        """True once the final stage has been idle for ``idle_timeout_s``.

        Only meaningful after sending has finished. ``fallback_ts`` anchors
        the timeout when no span has arrived at all (e.g. a pipeline that
        drops everything).
        """
        if now is None:
            now = time.time()
        if final_stage is None:
            final_stage = self.final_stage(experiment_id)
        last = self.last_arrival(experiment_id, final_stage) if final_stage else None
        if last is None:
            last = fallback_ts
        if last is None:
            return False
        return (now - last) >= idle_timeout_s

    def max_final_stage_end(self, experiment_id: str,
                            final_stage: str | None = None) -> float | None:
        if final_stage is None:
            final_stage = self.final_stage(experiment_id)
        if final_stage is None:
            return None
        with self._lock:
            return self._bucket_for(experiment_id).max_end.get(final_stage)
