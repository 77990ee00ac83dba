"""Tables and plot-ready series for experiments and simulations.

Every cell is computed from stored raw data on demand; nothing here owns
state. Money is carried internally in minor units and rendered in major
units: pretty tables round to two decimals, CSV keeps full precision so
that parse(render(x)) round-trips exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .simulator import SimulationResult
from .telemetry import SpanStore


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    formats: list[str | None] | None = None    # pretty-print hints per column


def minor_to_major(minor: float) -> float:
    return minor / 100.0


def _format_cell(value, fmt: str | None) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if value is None:
        return ""
    if fmt and isinstance(value, (int, float)):
        return format(value, fmt)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(table: Table) -> str:
    formats = table.formats or [None] * len(table.columns)
    rendered = [[_format_cell(v, f) for v, f in zip(row, formats)] for row in table.rows]
    widths = [len(c) for c in table.columns]
    for row in rendered:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = ["  ".join(c.ljust(w) for c, w in zip(table.columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rendered:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_cell(v, None) for v in row])
    return buf.getvalue()


def _parse_cell(text: str):
    if text == "":
        return None
    if text == "True":
        return True
    if text == "False":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_csv(text: str) -> Table:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return Table(columns=[])
    return Table(columns=rows[0], rows=[[_parse_cell(c) for c in row] for row in rows[1:]])


# -- experiment and simulation tables --------------------------------------

EXPERIMENT_COLUMNS = ["experiment", "mean_throughput_rps", "mean_latency_s",
                      "median_latency_s", "exp_length_s", "total_cost", "cost_per_hr"]
_EXPERIMENT_FORMATS = [None, ".2f", ".2f", ".2f", ".1f", ".2f", ".2f"]


def experiment_table(results: list[tuple[str, dict | None]]) -> tuple[Table, list[str]]:
    """One row per completed experiment; incomplete ones are skipped with a
    warning. Costs are in major units."""
    table = Table(columns=list(EXPERIMENT_COLUMNS), formats=list(_EXPERIMENT_FORMATS))
    warnings = []
    for name, result in results:
        if not result or result.get("state") != "Completed":
            warnings.append(f"experiment {name!r} is not Completed; skipped")
            continue
        table.rows.append([
            name,
            result["mean_throughput_rps"],
            result["mean_latency_s"],
            result["median_latency_s"],
            result["duration_s"],
            minor_to_major(result["total_cost_minor"]),
            minor_to_major(result["cost_rate_minor_per_hr"]),
        ])
    return table, warnings


SIMULATION_COLUMNS = ["run", "cost", "latency_median_s", "latency_mean_s",
                      "latency_backlog_s", "thruput_mean_rec_h", "thruput_max_rec_h",
                      "pct_latency_met", "slo_met"]
_SIMULATION_FORMATS = [None, ".2f", ".2f", ".2f", ".2f", ".2f", ".2f", ".2f", None]


def simulation_compare(summaries: list[tuple[str, dict]]) -> Table:
    """Side-by-side summary rows, one per simulation. Costs in major units."""
    table = Table(columns=list(SIMULATION_COLUMNS), formats=list(_SIMULATION_FORMATS))
    for name, s in summaries:
        table.rows.append([
            name,
            minor_to_major(s["total_cost_minor"]),
            s["median_latency_s"],
            s["mean_latency_s"],
            s["backlog_latency_s"],
            s["mean_thruput_rec_h"],
            s["max_thruput_rec_h"],
            s["pct_latency_met"],
            bool(s["slo_met"]),
        ])
    return table


MONTHLY_COLUMNS = ["month", "cloud", "net", "storage", "total"]


def monthly_table(monthly_rows: list[dict]) -> Table:
    """Monthly cost table in major units, with a totals row."""
    table = Table(columns=list(MONTHLY_COLUMNS),
                  formats=[None, ".2f", ".2f", ".2f", ".2f"])
    totals = [0.0, 0.0, 0.0, 0.0]
    for row in monthly_rows:
        cells = [minor_to_major(row["cloud_minor"]), minor_to_major(row["net_minor"]),
                 minor_to_major(row["storage_minor"]), minor_to_major(row["total_minor"])]
        totals = [t + c for t, c in zip(totals, cells)]
        table.rows.append([row["month"]] + cells)
    table.rows.append(["total"] + totals)
    return table


def twin_table(twins: list[tuple[str, dict]]) -> Table:
    table = Table(columns=["model", "max_rec_s", "cost_per_hr", "avg_latency_s", "policy"],
                  formats=[None, ".2f", ".2f", ".2f", None])
    for name, t in twins:
        table.rows.append([name, t["capacity_rps"],
                           minor_to_major(t["cost_rate_minor_per_hr"]),
                           t["base_latency_s"], t["policy"]])
    return table


# -- plot-ready series -----------------------------------------------------

PLOT_KINDS = ("stage-throughput", "stage-latency", "sim-queue", "sim-load",
              "traffic-projection")


def plot_series(kind: str, *, span_store: SpanStore | None = None,
                experiment_id: str | None = None,
                origin_ts: float | None = None,
                bucket_width_s: float = 5.0,
                sim_result: SimulationResult | None = None,
                hourly: dict | None = None,
                loads: list[float] | None = None) -> Table:
    """CSV-ready series; time is seconds for experiments, hours for
    simulations."""
    if kind in ("stage-throughput", "stage-latency"):
        if span_store is None or experiment_id is None:
            raise ValueError(f"{kind} needs span_store and experiment_id")
        stages = span_store.stages(experiment_id)
        series = {stage: span_store.stage_series(experiment_id, stage, bucket_width_s,
                                                 origin_ts=origin_ts)
                  for stage in stages}
        n = max((len(s.buckets) for s in series.values()), default=0)
        suffix = "rps" if kind == "stage-throughput" else "latency_mean_s"
        table = Table(columns=["t_s"] + [f"{stage}_{suffix}" for stage in stages])
        for i in range(n):
            row = [i * bucket_width_s]
            for stage in stages:
                buckets = series[stage].buckets
                if i < len(buckets):
                    b = buckets[i]
                    row.append(b.rate_rps if kind == "stage-throughput" else b.latency_mean_s)
                else:
                    row.append(0.0)
            table.rows.append(row)
        return table

    if kind in ("sim-queue", "sim-load"):
        if sim_result is not None:
            arrivals = sim_result.arrivals
            processed = sim_result.processed
            queue_end = sim_result.queue_end
        elif hourly is not None:
            arrivals = hourly["arrivals"]
            processed = hourly["processed"]
            queue_end = hourly["queue_end"]
        else:
            raise ValueError(f"{kind} needs a simulation result")
        if kind == "sim-queue":
            table = Table(columns=["hour", "queue_end_rec"])
            table.rows = [[h, q] for h, q in enumerate(queue_end)]
        else:
            table = Table(columns=["hour", "arrivals_rec_h", "processed_rec_h", "queue_end_rec"])
            table.rows = [[h, a, p, q] for h, (a, p, q)
                          in enumerate(zip(arrivals, processed, queue_end))]
        return table

    if kind == "traffic-projection":
        if loads is None:
            raise ValueError("traffic-projection needs loads")
        table = Table(columns=["hour", "load_rps"])
        table.rows = [[h, v] for h, v in enumerate(loads)]
        return table

    raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
