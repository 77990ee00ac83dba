"""Deterministic hour-step simulation of a twin under a year of traffic.

Each of the 8760 hours applies the FIFO balance equation

    processed = min(queue + arrivals, capacity_per_hour)
    queue'    = queue + arrivals - processed

for a simple twin; a quickscaling twin processes every arrival in its hour
(queue stays empty) and instead pays for replicas whenever arrivals exceed
one pipeline's hourly capacity. Hourly latency is approximated from the
end-of-hour queue: base latency plus the time a record arriving now would
wait for the queue ahead of it to drain.

Whatever is still queued at year end is not simulated into a second year;
it is costed as backlog — the hours needed to drain it, billed at the
twin's hourly rate.

In storage-aware mode the simulation also accrues per-megabyte network
cost on every arrival and daily storage cost over a rolling retention
window (each day's raw data is deleted ``retention_days`` after it was
collected). The monthly cost table buckets operating costs by calendar
month; the end-of-year backlog charge appears only in the summary total,
so monthly rows reflect steady-state spend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import EntityRef, Kind, ValidationError
from .traffic import DAYS_PER_YEAR, HOURS_PER_YEAR, MONTH_LENGTHS, month_of_day
from .twinfit import TwinModel

SLO_METRICS = ("latency", "error-rate")


@dataclass
class SLO:
    metric: str
    limit_s: float
    max_violation_fraction: float

    @classmethod
    def from_dict(cls, body: dict, where: str = "slo") -> "SLO":
        metric = body.get("metric", "latency")
        if metric not in SLO_METRICS:
            raise ValidationError(f"metric must be one of {SLO_METRICS}", f"{where}.metric")
        limit = body.get("limit_s")
        if not isinstance(limit, (int, float)) or not math.isfinite(limit) or limit <= 0:
            raise ValidationError("limit_s must be a finite number > 0", f"{where}.limit_s")
        frac = body.get("max_violation_fraction")
        if not isinstance(frac, (int, float)) or not (0 <= frac <= 1):
            raise ValidationError("max_violation_fraction must be in [0,1]",
                                  f"{where}.max_violation_fraction")
        return cls(metric=metric, limit_s=float(limit), max_violation_fraction=float(frac))

    def to_dict(self) -> dict:
        return {"metric": self.metric, "limit_s": self.limit_s,
                "max_violation_fraction": self.max_violation_fraction}


@dataclass
class SimulationConfig:
    twin: EntityRef | None = None
    traffic: EntityRef | None = None
    slos: list[SLO] = field(default_factory=list)
    record_size_mb: float = 0.0
    net_cost_minor_per_mb: float = 0.0
    storage_cost_minor_per_gb_day: float = 0.0
    retention_days: int = 0
    storage_aware: bool = False

    @classmethod
    def from_dict(cls, body: dict) -> "SimulationConfig":
        twin = EntityRef.from_dict(body["twin"], "twin") if "twin" in body else None
        if twin is not None and twin.kind is not Kind.TWIN:
            raise ValidationError("must reference a twin", "twin.kind")
        traffic = EntityRef.from_dict(body["traffic"], "traffic") if "traffic" in body else None
        if traffic is not None and traffic.kind is not Kind.TRAFFIC:
            raise ValidationError("must reference a traffic model", "traffic.kind")
        slos = [SLO.from_dict(s, f"slos[{i}]") for i, s in enumerate(body.get("slos", []))]
        size = body.get("record_size_mb", 0.0)
        net = body.get("net_cost_minor_per_mb", 0.0)
        store = body.get("storage_cost_minor_per_gb_day", 0.0)
        for key, val in (("record_size_mb", size), ("net_cost_minor_per_mb", net),
                         ("storage_cost_minor_per_gb_day", store)):
            if not isinstance(val, (int, float)) or not math.isfinite(val) or val < 0:
                raise ValidationError("must be a finite number >= 0", key)
        retention = body.get("retention_days", 0)
        if not isinstance(retention, int) or retention < 0:
            raise ValidationError("retention_days must be an integer >= 0", "retention_days")
        return cls(twin=twin, traffic=traffic, slos=slos,
                   record_size_mb=float(size), net_cost_minor_per_mb=float(net),
                   storage_cost_minor_per_gb_day=float(store),
                   retention_days=retention, storage_aware=bool(body.get("storage_aware", False)))

    def to_dict(self) -> dict:
        d = {
            "slos": [s.to_dict() for s in self.slos],
            "record_size_mb": self.record_size_mb,
            "net_cost_minor_per_mb": self.net_cost_minor_per_mb,
            "storage_cost_minor_per_gb_day": self.storage_cost_minor_per_gb_day,
            "retention_days": self.retention_days,
            "storage_aware": self.storage_aware,
        }
        if self.twin is not None:
            d["twin"] = self.twin.to_dict()
        if self.traffic is not None:
            d["traffic"] = self.traffic.to_dict()
        return d


@dataclass
class SimulationResult:
    arrivals: list[float]
    processed: list[float]
    queue_end: list[float]
    latency_s: list[float]
    cost_minor: list[float]                 # hourly cloud cost
    net_cost_minor: list[float]             # hourly network cost (zeros when agnostic)
    daily_volume_gb: list[float]
    daily_stored_gb: list[float]
    daily_storage_cost_minor: list[float]
    summary: dict
    monthly: list[dict]

    def to_summary_dict(self) -> dict:
        return dict(self.summary)


def step_simple(queue: float, arrivals: float, capacity_per_hour: float) -> tuple[float, float]:
    """One FIFO hour: drain queued work first, then the hour's arrivals."""
    processed = min(queue + arrivals, capacity_per_hour)
    return processed, queue + arrivals - processed


def hour_latency(queue_end: float, capacity_rps: float, base_latency_s: float,
                 kind: str = "simple") -> float:
    """Latency proxy for the hour: base plus time to drain the queue ahead."""
    if kind == "quickscaling":
        return base_latency_s
    return base_latency_s + queue_end / capacity_rps


def backlog_metrics(queue_end_of_year: float, twin: TwinModel) -> dict:
    """Time to drain the year-end queue at capacity, and its cost at the
    twin's hourly rate (e.g. duplicate pipelines spun up to catch up)."""
    backlog_latency_s = queue_end_of_year / twin.capacity_rps
    return {
        "backlog_latency_s": backlog_latency_s,
        "backlog_cost_minor": (backlog_latency_s / 3600.0) * twin.cost_rate_minor_per_hr,
    }


def network_cost(arrivals_year: float, record_size_mb: float, rate_minor_per_mb: float) -> float:
    return arrivals_year * record_size_mb * rate_minor_per_mb


def storage_cost(daily_volumes_gb: list[float], retention_days: int,
                 rate_minor_per_gb_day: float) -> tuple[list[float], float]:
    """Per-day and total storage cost under a rolling retention window.

    Day d stores the volumes of days (d - retention, d]; data older than
    the window has been deleted.
    """
    per_day = []
    window = 0.0
    for d, vol in enumerate(daily_volumes_gb):
        window += vol
        if d - retention_days >= 0:
            window -= daily_volumes_gb[d - retention_days]
        stored = window if retention_days > 0 else 0.0
        per_day.append(stored * rate_minor_per_gb_day)
    return per_day, math.fsum(per_day)


def simulate(twin: TwinModel, loads_rps: list[float], config: SimulationConfig) -> SimulationResult:
    """Run the year. ``loads_rps`` must hold one rate per hour (8760)."""
    if len(loads_rps) != HOURS_PER_YEAR:
        raise ValidationError(f"need exactly {HOURS_PER_YEAR} hourly loads")
    capacity_per_hour = twin.capacity_rps * 3600.0
    quick = twin.kind == "quickscaling"

    arrivals = [rate * 3600.0 for rate in loads_rps]
    processed: list[float] = []
    queue_end: list[float] = []
    latency: list[float] = []
    cloud: list[float] = []
    queue = 0.0
    for arr in arrivals:
        if quick:
            done = arr
            queue = 0.0
            cloud.append(twin.cost_rate_minor_per_hr * max(1.0, arr / capacity_per_hour))
        else:
            done, queue = step_simple(queue, arr, capacity_per_hour)
            cloud.append(twin.cost_rate_minor_per_hr)
        processed.append(done)
        queue_end.append(queue)
        latency.append(hour_latency(queue, twin.capacity_rps, twin.base_latency_s, twin.kind))

    backlog = backlog_metrics(queue_end[-1], twin)
    cloud_total = math.fsum(cloud) + backlog["backlog_cost_minor"]

    # network + storage only accrue in storage-aware mode
    net_hourly = [0.0] * HOURS_PER_YEAR
    daily_volume = [0.0] * DAYS_PER_YEAR
    daily_stored = [0.0] * DAYS_PER_YEAR
    daily_storage_cost = [0.0] * DAYS_PER_YEAR
    net_total = storage_total = 0.0
    if config.storage_aware:
        net_hourly = [a * config.record_size_mb * config.net_cost_minor_per_mb
                      for a in arrivals]
        net_total = math.fsum(net_hourly)
        for h, a in enumerate(arrivals):
            daily_volume[h // 24] += a * config.record_size_mb / 1024.0
        daily_storage_cost, storage_total = storage_cost(
            daily_volume, config.retention_days, config.storage_cost_minor_per_gb_day)
        window = 0.0
        for d in range(DAYS_PER_YEAR):
            window += daily_volume[d]
            if d - config.retention_days >= 0:
                window -= daily_volume[d - config.retention_days]
            daily_stored[d] = window if config.retention_days > 0 else 0.0

    latency_slos = [s for s in config.slos if s.metric == "latency"]
    if latency_slos:
        tightest = min(s.limit_s for s in latency_slos)
        pct_met = 100.0 * sum(1 for v in latency if v <= tightest) / HOURS_PER_YEAR
        slo_met = all(
            (sum(1 for v in latency if v > s.limit_s) / HOURS_PER_YEAR)
            <= s.max_violation_fraction
            for s in latency_slos)
    else:
        # error-rate SLOs evaluate vacuously: the twin models no errors
        pct_met = 100.0
        slo_met = True

    ordered = sorted(latency)
    mid = HOURS_PER_YEAR // 2
    median_latency = (ordered[mid - 1] + ordered[mid]) / 2.0

    summary = {
        "total_cost_minor": cloud_total + net_total + storage_total,
        "cloud_cost_minor": cloud_total,
        "net_cost_minor": net_total,
        "storage_cost_minor": storage_total,
        "median_latency_s": median_latency,
        "mean_latency_s": math.fsum(latency) / HOURS_PER_YEAR,
        "backlog_latency_s": backlog["backlog_latency_s"],
        "backlog_cost_minor": backlog["backlog_cost_minor"],
        "mean_thruput_rec_h": math.fsum(processed) / HOURS_PER_YEAR,
        "max_thruput_rec_h": max(processed),
        "pct_latency_met": pct_met,
        "slo_met": slo_met,
        "queue_end_of_year": queue_end[-1],
        "arrivals_total": math.fsum(arrivals),
        "processed_total": math.fsum(processed),
    }

    result = SimulationResult(
        arrivals=arrivals, processed=processed, queue_end=queue_end,
        latency_s=latency, cost_minor=cloud, net_cost_minor=net_hourly,
        daily_volume_gb=daily_volume, daily_stored_gb=daily_stored,
        daily_storage_cost_minor=daily_storage_cost,
        summary=summary, monthly=[])
    result.monthly = monthly_rollup(result)
    return result


def monthly_rollup(result: SimulationResult) -> list[dict]:
    """12 rows of {cloud, net, storage, total} minor units by calendar month.

    Recomputable from the hourly/daily arrays; excludes the end-of-year
    backlog charge (see module docstring).
    """
    rows = [{"month": m + 1, "cloud_minor": 0.0, "net_minor": 0.0,
             "storage_minor": 0.0, "total_minor": 0.0} for m in range(12)]
    for h in range(HOURS_PER_YEAR):
        m = month_of_day(h // 24 + 1)
        rows[m]["cloud_minor"] += result.cost_minor[h]
        rows[m]["net_minor"] += result.net_cost_minor[h]
    for d in range(DAYS_PER_YEAR):
        rows[month_of_day(d + 1)]["storage_minor"] += result.daily_storage_cost_minor[d]
    for row in rows:
        row["total_minor"] = row["cloud_minor"] + row["net_minor"] + row["storage_minor"]
    return rows


def month_hours(month_index: int) -> int:
    return MONTH_LENGTHS[month_index] * 24
