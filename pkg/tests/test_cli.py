import json

import pytest

from windtunnel.apiservice import serve_all
from windtunnel.cli import main
from windtunnel.reporting import parse_csv

from conftest import TELEMETRY_SCHEMA


def write_json(tmp_path, name, payload) -> str:
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


@pytest.fixture
def cli(tmp_path, capsys):
    data_dir = str(tmp_path / "data")

    def run(*argv, expect=0):
        code = main(["--data-dir", data_dir, *argv])
        captured = capsys.readouterr()
        assert code == expect, captured.err or captured.out
        return captured.out

    run.data_dir = data_dir
    run.tmp = tmp_path
    return run


class TestLocalVerbs:
    def test_put_and_list_schema(self, cli):
        schema_file = write_json(cli.tmp, "schema.json", TELEMETRY_SCHEMA)
        out = cli("schema", "put", "telemetry", "--file", schema_file)
        assert json.loads(out) == {"kind": "schema", "name": "telemetry", "version": 1}
        listing = cli("schema", "list")
        assert "telemetry" in listing

    def test_dataset_put_builds_payloads(self, cli, tmp_path):
        cli("schema", "put", "telemetry", "--file",
            write_json(cli.tmp, "s.json", TELEMETRY_SCHEMA))
        cli("dataset", "put", "ds", "--file", write_json(cli.tmp, "d.json", {
            "schema": {"kind": "schema", "name": "telemetry"},
            "record_count": 10, "format": "csv", "compression": "zip", "seed": 1}))
        payload_dir = tmp_path / "data" / "datasets" / "ds-v1"
        assert (payload_dir / "manifest.json").exists()
        assert (payload_dir / "payload-00000.zip").exists()

    def test_traffic_example_and_preview_csv(self, cli):
        cli("traffic", "put", "nominal", "--example", "nominal")
        out = cli("--format", "csv", "traffic", "preview", "nominal")
        table = parse_csv(out)
        assert table.columns == ["hour", "load_rps"]
        assert len(table.rows) == 8760

    def test_billing_ingest(self, cli):
        billing = cli.tmp / "billing.csv"
        billing.write_text("tag,window_start,window_end,amount_minor\n"
                           "p,2026-01-01T00:00:00Z,2026-01-01T01:00:00Z,56\n")
        out = cli("billing", "ingest", "--file", str(billing))
        assert "stored: 1" in out

    def test_twin_put_sim_run_compare_monthly(self, cli):
        cli("twin", "put", "blocking", "--file", write_json(cli.tmp, "t.json", {
            "kind": "simple", "capacity_rps": 1.95, "cost_rate_minor_per_hr": 0.82,
            "base_latency_s": 0.15}))
        cli("traffic", "put", "flat", "--file",
            write_json(cli.tmp, "m.json", {"r_rps": 1.0}))
        config = write_json(cli.tmp, "cfg.json", {
            "twin": {"kind": "twin", "name": "blocking"},
            "traffic": {"kind": "traffic", "name": "flat"},
            "slos": [{"metric": "latency", "limit_s": 14400,
                      "max_violation_fraction": 0.05}]})
        out = cli("--format", "csv", "sim", "run", "year", "--file", config)
        table = parse_csv(out)
        cost = table.rows[0][table.columns.index("cost")]
        assert cost == pytest.approx(71.83, abs=0.01)
        compare = cli("--format", "csv", "sim", "compare", "year")
        assert parse_csv(compare).rows[0][0] == "year"
        monthly = cli("--format", "csv", "sim", "monthly", "year")
        rows = parse_csv(monthly).rows
        assert len(rows) == 13 and rows[-1][0] == "total"

    def test_report_warns_and_exits_nonzero_for_missing(self, cli, capsys):
        code = main(["--data-dir", cli.data_dir, "experiment", "report", "ghost"])
        captured = capsys.readouterr()
        assert code == 1
        assert "skipped" in captured.err

    def test_invalid_body_exits_2(self, cli, capsys):
        bad = write_json(cli.tmp, "bad.json", {"name": "x", "fields": []})
        code = main(["--data-dir", cli.data_dir, "schema", "put", "x", "--file", bad])
        assert code == 2
        assert "error" in capsys.readouterr().err


class TestServerMode:
    def test_experiment_run_against_live_api(self, tmp_path, capsys):
        handle = serve_all(tmp_path / "data", ref_presets=["no-blocking-write"])
        try:
            api = handle.api_url
            args = ["--server", api]
            assert main([*args, "schema", "put", "telemetry", "--file",
                         write_json(tmp_path, "s.json", TELEMETRY_SCHEMA)]) == 0
            assert main([*args, "dataset", "put", "ds", "--file",
                         write_json(tmp_path, "d.json", {
                             "schema": {"kind": "schema", "name": "telemetry"},
                             "record_count": 10, "seed": 5})]) == 0
            assert main([*args, "loadpattern", "put", "lp", "--file",
                         write_json(tmp_path, "lp.json", {
                             "segments": [{"duration_s": 1.5, "start_rps": 6,
                                           "end_rps": 6}]})]) == 0
            capsys.readouterr()
            spec = write_json(tmp_path, "exp.json", {
                "name": "cli-exp",
                "pipeline": {"kind": "pipeline", "name": "ref-no-blocking-write"},
                "dataset": {"kind": "dataset", "name": "ds"},
                "load_pattern": {"kind": "loadpattern", "name": "lp"},
                "drain_idle_timeout_s": 1.0})
            code = main([*args, "--format", "csv", "experiment", "run", "--file", spec])
            out = capsys.readouterr().out
            assert code == 0
            table = parse_csv(out)
            row = dict(zip(table.columns, table.rows[0]))
            assert row["experiment"] == "cli-exp"
            assert row["mean_throughput_rps"] > 0
            assert main([*args, "experiment", "status", "cli-exp"]) == 0
        finally:
            handle.stop()
