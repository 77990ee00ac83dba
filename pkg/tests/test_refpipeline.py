import threading
import time

import pytest
import requests

from windtunnel.catalog import ValidationError
from windtunnel.refpipeline import (
    ReferencePipeline,
    StageConfig,
    input_referred_capacity,
    pipeline_capacity,
    preset,
)


class SpanCollector:
    def __init__(self):
        self.spans = []
        self._lock = threading.Lock()

    def __call__(self, span):
        with self._lock:
            self.spans.append(span)

    def by_stage(self):
        out = {}
        with self._lock:
            for s in self.spans:
                out.setdefault(s.stage, []).append(s)
        return out


@pytest.fixture
def collector():
    return SpanCollector()


def run_records(configs, collector, n, spacing_s=0.0):
    pipe = ReferencePipeline(configs, span_sink=collector).start()
    try:
        for i in range(n):
            pipe.ingest(b"payload", str(i), "exp")
            if spacing_s:
                time.sleep(spacing_s)
        assert pipe.wait_idle(timeout_s=60)
        pipe._emitter.drain()
        time.sleep(0.1)
    finally:
        pipe.stop()
    return pipe


class TestPresets:
    @pytest.mark.parametrize("variant,capacity", [
        ("blocking-write", 1.95),
        ("no-blocking-write", 6.15),
        ("cpu-limited", 0.66),
    ])
    def test_bottleneck_capacity(self, variant, capacity):
        configs = preset(variant)
        caps = input_referred_capacity(configs)
        assert caps[1] == pytest.approx(capacity, rel=1e-9)
        assert pipeline_capacity(configs) == pytest.approx(capacity, rel=1e-9)

    @pytest.mark.parametrize("variant", ["blocking-write", "no-blocking-write", "cpu-limited"])
    def test_other_stages_strictly_faster(self, variant):
        caps = input_referred_capacity(preset(variant))
        assert caps[0] > caps[1]
        assert caps[2] > caps[1]

    def test_unzip_fans_out_five(self):
        assert preset("no-blocking-write")[0].fan_out == 5

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            preset("turbo")

    def test_blocking_differs_only_by_delay(self):
        blocking = preset("blocking-write")
        baseline = preset("no-blocking-write")
        assert blocking[1].service_time_s_per_item == baseline[1].service_time_s_per_item
        assert blocking[1].extra_blocking_delay_s > 0
        assert baseline[1].extra_blocking_delay_s == 0

    def test_stage_config_validation(self):
        with pytest.raises(ValidationError):
            StageConfig(name="s", service_time_s_per_item=0)
        with pytest.raises(ValidationError):
            StageConfig(name="s", service_time_s_per_item=0.1, fan_out=0)


def fast_configs(fan_out=5):
    return [
        StageConfig(name="unzip", service_time_s_per_item=0.002, fan_out=fan_out),
        StageConfig(name="parse", service_time_s_per_item=0.004),
        StageConfig(name="store", service_time_s_per_item=0.003),
    ]


class TestProcessing:
    def test_span_bookkeeping_one_post(self, collector):
        run_records(fast_configs(), collector, 1)
        stages = collector.by_stage()
        assert len(stages["unzip"]) == 1
        assert len(stages["parse"]) == 5
        assert len(stages["store"]) == 5

    def test_child_traces_carry_parent(self, collector):
        run_records(fast_configs(), collector, 1)
        for span in collector.by_stage()["parse"]:
            assert span.parent_trace_id == "0"
            assert span.trace_id.startswith("0/")

    def test_sub_capacity_latency_is_stage_time_sum(self, collector):
        # fan-out 1: a lone record's end-to-end time is just the three services
        configs = [
            StageConfig(name="a", service_time_s_per_item=0.02),
            StageConfig(name="b", service_time_s_per_item=0.02),
            StageConfig(name="c", service_time_s_per_item=0.02),
        ]
        run_records(configs, collector, 1)
        spans = collector.spans
        start = min(s.start_ts for s in spans)
        end = max(s.end_ts for s in spans)
        assert end - start == pytest.approx(0.06, abs=0.04)

    def test_fifo_within_stage(self, collector):
        configs = [StageConfig(name="only", service_time_s_per_item=0.003)]
        run_records(configs, collector, 20)
        spans = collector.by_stage()["only"]
        order = [int(s.trace_id) for s in sorted(spans, key=lambda s: s.start_ts)]
        assert order == list(range(20))

    def test_overload_throughput_is_bottleneck_capacity(self, collector):
        # parse is the bottleneck: 5 items x 10 ms per record -> 20 rec/s
        configs = [
            StageConfig(name="unzip", service_time_s_per_item=0.001, fan_out=5),
            StageConfig(name="parse", service_time_s_per_item=0.010),
            StageConfig(name="store", service_time_s_per_item=0.002),
        ]
        capacity = pipeline_capacity(configs)
        assert capacity == pytest.approx(20.0)
        n = 60
        t0 = time.time()
        run_records(configs, collector, n)
        stages = collector.by_stage()
        drained = max(s.end_ts for s in stages["store"])
        measured = n / (drained - t0)
        assert measured == pytest.approx(capacity, rel=0.10)

    def test_blocking_write_slows_parse_stage(self, collector):
        other = SpanCollector()
        run_records(preset("no-blocking-write"), other, 2)
        run_records(preset("blocking-write"), collector, 2)
        blocking_latency = max(s.duration_s for s in collector.by_stage()["parse"])
        baseline_latency = max(s.duration_s for s in other.by_stage()["parse"])
        assert blocking_latency > baseline_latency
        assert min(s.duration_s for s in collector.by_stage()["parse"]) >= 0.10


class TestHttpFront:
    def test_ingest_and_health(self, collector):
        pipe = ReferencePipeline(fast_configs(), span_sink=collector)
        server = pipe.serve()
        try:
            health = requests.get(server.url + "/healthz", timeout=5)
            assert health.status_code == 200
            resp = requests.post(server.url + "/", data=b"zipbytes", headers={
                "X-Windtunnel-Record-Index": "7",
                "X-Windtunnel-Experiment": "exp-x",
            }, timeout=5)
            assert resp.status_code == 200
            assert pipe.wait_idle()
            pipe._emitter.drain()
            time.sleep(0.1)
            assert {s.trace_id for s in collector.by_stage()["unzip"]} == {"7"}
            assert all(s.experiment_id == "exp-x" for s in collector.spans)
        finally:
            pipe.stop()

    def test_empty_body_is_400(self, collector):
        pipe = ReferencePipeline(fast_configs(), span_sink=collector)
        server = pipe.serve()
        try:
            resp = requests.post(server.url + "/", data=b"", timeout=5)
            assert resp.status_code == 400
            assert "error" in resp.json()
        finally:
            pipe.stop()
