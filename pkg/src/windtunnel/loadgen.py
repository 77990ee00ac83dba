"""Open-loop load delivery along a piecewise-linear rate schedule.

The send schedule is derived analytically: within a segment whose rate
ramps linearly from a to b over d seconds, the cumulative-count function
N(t) is quadratic, so the k-th send time is the exact solution of
N(t) = k (quadratic formula) rather than the output of a polling loop.
That keeps low-rate schedules exact, which matters because experiments
often probe capacities of a few records per second.

Delivery is open-loop: a scheduler thread dispatches each send at its
planned time into a worker pool and never waits for responses, so a slow
pipeline cannot distort the offered load. Each send is an HTTP POST of the
next dataset payload (round-robin) carrying ``X-Windtunnel-Record-Index``
and ``X-Windtunnel-Experiment`` headers for trace correlation.
"""

from __future__ import annotations

import csv
import io
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import requests

from .catalog import ValidationError

_EPS = 1e-9


class ProbeError(Exception):
    """The ingest endpoint was unreachable at experiment start."""


@dataclass
class Segment:
    duration_s: float
    start_rps: float
    end_rps: float

    def area(self) -> float:
        # exact integral of a linear rate over the segment
        return self.duration_s * (self.start_rps + self.end_rps) / 2.0


@dataclass
class LoadPattern:
    segments: list[Segment]

    @classmethod
    def from_dict(cls, body: dict) -> "LoadPattern":
        raw = body.get("segments")
        if not isinstance(raw, list) or not raw:
            raise ValidationError("need at least one segment", "segments")
        segments = []
        for i, seg in enumerate(raw):
            where = f"segments[{i}]"
            if not isinstance(seg, dict):
                raise ValidationError("segment must be an object", where)
            try:
                duration = float(seg["duration_s"])
                start = float(seg.get("start_rps", seg.get("rps", 0.0)))
                end = float(seg.get("end_rps", start))
            except (KeyError, TypeError, ValueError):
                raise ValidationError("segment needs duration_s and rates", where)
            if not (duration > 0 and math.isfinite(duration)):
                raise ValidationError("duration_s must be positive and finite", f"{where}.duration_s")
            if not (math.isfinite(start) and start >= 0):
                raise ValidationError("start_rps must be finite and >= 0", f"{where}.start_rps")
            if not (math.isfinite(end) and end >= 0):
                raise ValidationError("end_rps must be finite and >= 0", f"{where}.end_rps")
            segments.append(Segment(duration_s=duration, start_rps=start, end_rps=end))
        return cls(segments=segments)

    def to_dict(self) -> dict:
        return {"segments": [
            {"duration_s": s.duration_s, "start_rps": s.start_rps, "end_rps": s.end_rps}
            for s in self.segments]}

    def total_duration_s(self) -> float:
        return sum(s.duration_s for s in self.segments)

    def rate_at(self, t: float) -> float:
        """Instantaneous rate at offset t (0 outside the schedule)."""
        offset = 0.0
        for seg in self.segments:
            if t <= offset + seg.duration_s:
                frac = (t - offset) / seg.duration_s
                return seg.start_rps + (seg.end_rps - seg.start_rps) * frac
            offset += seg.duration_s
        return 0.0


def total_count(pattern: LoadPattern) -> int:
    """floor of the integral of the rate curve over the whole schedule."""
    return math.floor(sum(seg.area() for seg in pattern.segments) + _EPS)


def _invert_segment(a: float, b: float, d: float, x: float) -> float:
    """Solve a*tau + (b-a)*tau^2/(2d) = x for tau in [0, d]."""
    if abs(b - a) < 1e-12:
        tau = x / a
    else:
        c2 = (b - a) / (2.0 * d)
        disc = max(a * a + 4.0 * c2 * x, 0.0)
        tau = (-a + math.sqrt(disc)) / (2.0 * c2)
    return min(max(tau, 0.0), d)


def plan_send_times(pattern: LoadPattern) -> list[float]:
    """Send offsets (seconds from start): the k-th time solves N(t) = k."""
    total = total_count(pattern)
    times: list[float] = []
    k = 1
    cum = 0.0
    t_offset = 0.0
    for seg in pattern.segments:
        seg_end_cum = cum + seg.area()
        while k <= total and k <= seg_end_cum + _EPS:
            tau = _invert_segment(seg.start_rps, seg.end_rps, seg.duration_s, k - cum)
            times.append(t_offset + tau)
            k += 1
        cum = seg_end_cum
        t_offset += seg.duration_s
    return times


# -- delivery ------------------------------------------------------------


@dataclass
class SendEntry:
    record_index: int
    scheduled_s: float
    actual_s: float | None = None
    wall_ts: float | None = None
    status: int | None = None
    error: str | None = None


@dataclass
class SendLog:
    experiment_id: str
    started_at: float                      # wall-clock epoch of schedule start
    entries: list[SendEntry] = field(default_factory=list)
    finished_at: float | None = None

    def ok_count(self) -> int:
        return sum(1 for e in self.entries if e.status is not None and 200 <= e.status < 300)

    def first_send_wall(self) -> float:
        sent = [e.wall_ts for e in self.entries if e.wall_ts is not None]
        if not sent:
            raise ValueError("no sends recorded")
        return min(sent)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["record_index", "scheduled_s", "actual_s", "wall_ts", "status", "error"])
        for e in self.entries:
            writer.writerow([
                e.record_index,
                repr(e.scheduled_s),
                "" if e.actual_s is None else repr(e.actual_s),
                "" if e.wall_ts is None else repr(e.wall_ts),
                "" if e.status is None else e.status,
                e.error or "",
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, experiment_id: str = "", started_at: float = 0.0) -> "SendLog":
        rows = list(csv.DictReader(io.StringIO(text)))
        entries = []
        for row in rows:
            entries.append(SendEntry(
                record_index=int(row["record_index"]),
                scheduled_s=float(row["scheduled_s"]),
                actual_s=float(row["actual_s"]) if row["actual_s"] else None,
                wall_ts=float(row["wall_ts"]) if row["wall_ts"] else None,
                status=int(row["status"]) if row["status"] else None,
                error=row["error"] or None,
            ))
        log = cls(experiment_id=experiment_id, started_at=started_at, entries=entries)
        if entries and entries[0].wall_ts is not None and started_at == 0.0:
            log.started_at = entries[0].wall_ts - entries[0].actual_s
        return log


def probe_endpoint(url: str, timeout_s: float = 5.0) -> None:
    """One reachability check; any HTTP response counts as reachable."""
    try:
        requests.get(url, timeout=timeout_s)
    except requests.RequestException as exc:
        raise ProbeError(f"endpoint {url} unreachable: {exc}") from exc


_thread_local = threading.local()


def _session() -> requests.Session:
    sess = getattr(_thread_local, "session", None)
    if sess is None:
        sess = requests.Session()
        _thread_local.session = sess
    return sess


def run_load(
    payloads: Sequence[bytes],
    pattern: LoadPattern,
    endpoint: str,
    experiment_id: str,
    content_type: str = "application/octet-stream",
    probe: bool = True,
    pool_size: int = 32,
    request_timeout_s: float = 30.0,
    on_sent: Callable[[int], None] | None = None,
) -> SendLog:
    """Deliver payloads along the schedule; never fatal per-send.

    Payload assignment is round-robin, so a schedule may plan more sends
    than the dataset has payloads. Transport errors are recorded in the
    log entry; only a failed initial probe aborts.
    """
    if not payloads:
        raise ValueError("dataset has no payloads")
    if probe:
        probe_endpoint(endpoint)

    plan = plan_send_times(pattern)
    entries = [SendEntry(record_index=k, scheduled_s=t) for k, t in enumerate(plan)]
    log = SendLog(experiment_id=experiment_id, started_at=time.time(), entries=entries)
    if not plan:
        log.finished_at = log.started_at
        return log

    t0 = time.monotonic()
    wall0 = log.started_at

    def send(k: int) -> None:
        entry = entries[k]
        entry.actual_s = time.monotonic() - t0
        entry.wall_ts = wall0 + entry.actual_s
        headers = {
            "Content-Type": content_type,
            "X-Windtunnel-Record-Index": str(k),
            "X-Windtunnel-Experiment": experiment_id,
        }
        try:
            resp = _session().post(endpoint, data=payloads[k % len(payloads)],
                                   headers=headers, timeout=request_timeout_s)
            entry.status = resp.status_code
        except requests.RequestException as exc:
            entry.error = type(exc).__name__
        if on_sent is not None:
            on_sent(k + 1)

    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        for k, t_k in enumerate(plan):
            delay = t0 + t_k - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            pool.submit(send, k)
    log.finished_at = wall0 + (time.monotonic() - t0)
    return log


def calibration_max_rps(n: int = 2000, pool_size: int = 32) -> float:
    """Measured ceiling of the scheduler/pool dispatch path, in sends/s.

    Runs the dispatch machinery against a no-op transport; reports how fast
    this host can emit. Schedules above this rate will lag their plan.
    """
    done = threading.Event()
    count = 0
    lock = threading.Lock()

    def noop(_k: int) -> None:
        nonlocal count
        with lock:
            count += 1
            if count >= n:
                done.set()

    t0 = time.monotonic()
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        for k in range(n):
            pool.submit(noop, k)
    done.wait(timeout=30)
    elapsed = time.monotonic() - t0
    return n / elapsed if elapsed > 0 else float("inf")
