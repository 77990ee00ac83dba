import threading

import pytest

from windtunnel.catalog import (
    Catalog,
    EntityRef,
    Kind,
    UnknownEntityError,
    ValidationError,
)

SCHEMA_BODY = {"name": "s1", "fields": [{"name": "x", "kind": "int",
                                         "constraint": {"min": 0, "max": 9}}]}

# one representative valid body per entity kind, for read-after-write
VALID_BODIES = {
    Kind.SCHEMA: SCHEMA_BODY,
    Kind.DATASET: {"schema": {"kind": "schema", "name": "s1"}, "record_count": 3,
                   "format": "csv", "compression": "zip", "seed": 1},
    Kind.LOADPATTERN: {"segments": [{"duration_s": 5.0, "start_rps": 1.0, "end_rps": 2.0}]},
    Kind.PIPELINE: {"name": "p1", "ingest_endpoint": "http://127.0.0.1:9/",
                    "metrics_endpoint": "http://127.0.0.1:9/spans", "cost_tags": ["p1"]},
    Kind.EXPERIMENT: {"spec": {"name": "e1",
                               "pipeline": {"kind": "pipeline", "name": "p1"},
                               "dataset": {"kind": "dataset", "name": "d1"},
                               "load_pattern": {"kind": "loadpattern", "name": "lp1"}},
                      "state": "Pending"},
    Kind.TWIN: {"kind": "simple", "capacity_rps": 1.95, "cost_rate_minor_per_hr": 82.0,
                "base_latency_s": 0.15, "policy": "fifo"},
    Kind.TRAFFIC: {"r_rps": 3.5, "growth": 0.5, "monthly": [1.0] * 12, "hourly": [1.0] * 168},
    Kind.SIMULATION: {"config": {"twin": {"kind": "twin", "name": "t1"},
                                 "traffic": {"kind": "traffic", "name": "tm1"},
                                 "slos": [], "storage_aware": False}},
}


@pytest.fixture
def catalog(tmp_path):
    return Catalog(tmp_path)


def test_first_put_gets_version_1(catalog):
    ref = catalog.put(Kind.SCHEMA, "telemetry", SCHEMA_BODY)
    assert ref == EntityRef(Kind.SCHEMA, "telemetry", 1)


def test_second_put_increments_version(catalog):
    catalog.put(Kind.SCHEMA, "telemetry", SCHEMA_BODY)
    ref = catalog.put(Kind.SCHEMA, "telemetry", SCHEMA_BODY)
    assert ref.version == 2
    assert catalog.latest_version(Kind.SCHEMA, "telemetry") == 2


def test_invalid_loadpattern_rejected(catalog):
    with pytest.raises(ValidationError):
        catalog.put(Kind.LOADPATTERN, "bad",
                    {"segments": [{"duration_s": -3, "start_rps": 1, "end_rps": 1}]})


@pytest.mark.parametrize("kind", list(Kind))
def test_read_after_write_all_kinds(catalog, kind):
    body = VALID_BODIES[kind]
    ref = catalog.put(kind, "thing", body)
    assert catalog.resolve(ref) == body
    assert catalog.get(kind, "thing") == body


def test_prior_versions_remain_readable(catalog):
    catalog.put(Kind.SCHEMA, "s", SCHEMA_BODY)
    v2 = dict(SCHEMA_BODY, name="s-v2")
    catalog.put(Kind.SCHEMA, "s", v2)
    assert catalog.get(Kind.SCHEMA, "s", version=1) == SCHEMA_BODY
    assert catalog.get(Kind.SCHEMA, "s") == v2


def test_delete_is_tombstone(catalog):
    catalog.put(Kind.SCHEMA, "s", SCHEMA_BODY)
    catalog.delete(Kind.SCHEMA, "s")
    assert catalog.list(Kind.SCHEMA) == []
    with pytest.raises(UnknownEntityError):
        catalog.get(Kind.SCHEMA, "s")
    # history still readable by explicit version
    assert catalog.get(Kind.SCHEMA, "s", version=1) == SCHEMA_BODY


def test_list_returns_latest_versions(catalog):
    catalog.put(Kind.SCHEMA, "a", SCHEMA_BODY)
    catalog.put(Kind.SCHEMA, "b", SCHEMA_BODY)
    catalog.put(Kind.SCHEMA, "b", SCHEMA_BODY)
    assert catalog.list(Kind.SCHEMA) == [("a", 1), ("b", 2)]


def test_unknown_entity_errors(catalog):
    with pytest.raises(UnknownEntityError):
        catalog.get(Kind.SCHEMA, "missing")
    with pytest.raises(UnknownEntityError):
        catalog.delete(Kind.SCHEMA, "missing")


def test_bad_names_rejected(catalog):
    for name in ("", "../evil", "a b", ".hidden"):
        with pytest.raises(ValidationError):
            catalog.put(Kind.SCHEMA, name, SCHEMA_BODY)


def test_concurrent_puts_get_contiguous_versions(catalog):
    n = 16
    versions = []
    barrier = threading.Barrier(n)

    def put():
        barrier.wait()
        versions.append(catalog.put(Kind.SCHEMA, "s", SCHEMA_BODY).version)

    threads = [threading.Thread(target=put) for _ in range(n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(versions) == list(range(1, n + 1))


class TestEngagement:
    def test_engage_idle_pipeline(self, catalog):
        catalog.put(Kind.PIPELINE, "p1", VALID_BODIES[Kind.PIPELINE])
        assert catalog.engage("p1", holder="exp1") is True
        assert catalog.pipeline_engaged("p1")
        assert catalog.engaged_holder("p1") == "exp1"

    def test_second_engage_is_busy(self, catalog):
        catalog.put(Kind.PIPELINE, "p1", VALID_BODIES[Kind.PIPELINE])
        assert catalog.engage("p1", holder="exp1") is True
        assert catalog.engage("p1", holder="exp2") is False

    def test_engage_release_engage(self, catalog):
        catalog.put(Kind.PIPELINE, "p1", VALID_BODIES[Kind.PIPELINE])
        assert catalog.engage("p1", holder="exp1")
        catalog.release("p1", holder="exp1")
        assert not catalog.pipeline_engaged("p1")
        assert catalog.engage("p1", holder="exp2")

    def test_engage_unknown_pipeline(self, catalog):
        with pytest.raises(UnknownEntityError):
            catalog.engage("ghost", holder="exp1")

    def test_mutual_exclusion_under_contention(self, catalog):
        catalog.put(Kind.PIPELINE, "p1", VALID_BODIES[Kind.PIPELINE])
        n = 32
        results = []
        barrier = threading.Barrier(n)

        def attempt(i):
            barrier.wait()
            results.append(catalog.engage("p1", holder=f"exp{i}"))

        threads = [threading.Thread(target=attempt, args=(i,)) for i in range(n)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sum(results) == 1
