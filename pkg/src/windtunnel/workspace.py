"""One object wiring the whole harness onto a data directory.

The CLI and the HTTP API both dispatch into this layer, so every
capability exists exactly once and the two front ends stay thin.
"""

from __future__ import annotations

from pathlib import Path

from . import datagen, reporting, simulator, traffic, twinfit
from .catalog import Catalog, EntityRef, Kind, UnknownEntityError, ValidationError
from .costing import BillingStore
from .orchestrator import Orchestrator, Scheduler
from .simulator import SimulationConfig, SimulationResult
from .telemetry import SpanStore
from .twinfit import TwinModel

KIND_ROUTES = {
    "schemas": Kind.SCHEMA,
    "datasets": Kind.DATASET,
    "loadpatterns": Kind.LOADPATTERN,
    "pipelines": Kind.PIPELINE,
    "experiments": Kind.EXPERIMENT,
    "twins": Kind.TWIN,
    "traffic": Kind.TRAFFIC,
    "simulations": Kind.SIMULATION,
}


class Workspace:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.catalog = Catalog(self.data_dir)
        self.billing = BillingStore(self.data_dir)
        self.spans = SpanStore(self.data_dir, state_lookup=self._experiment_state)
        self.orchestrator = Orchestrator(self.catalog, self.spans, self.billing, self.data_dir)
        self.scheduler = Scheduler(self.orchestrator)

    def _experiment_state(self, experiment_id: str) -> str | None:
        try:
            return self.catalog.get(Kind.EXPERIMENT, experiment_id).get("state")
        except UnknownEntityError:
            return None

    # -- entities ------------------------------------------------------------

    def put_entity(self, kind: Kind, name: str, body: dict) -> EntityRef:
        ref = self.catalog.put(kind, name, body)
        if kind is Kind.DATASET:
            # materialize payloads eagerly so experiments start instantly
            self.orchestrator.build_or_load_dataset(ref)
        return ref

    def get_entity(self, kind: Kind, name: str, version: int | None = None) -> dict:
        body = self.catalog.get(kind, name, version)
        if kind is Kind.PIPELINE:
            body = dict(body)
            body["engaged"] = self.catalog.pipeline_engaged(name)
        return body

    def list_entities(self, kind: Kind) -> list[dict]:
        out = []
        for name, version in self.catalog.list(kind):
            item = {"name": name, "version": version}
            if kind is Kind.PIPELINE:
                item["engaged"] = self.catalog.pipeline_engaged(name)
            if kind is Kind.EXPERIMENT:
                item["state"] = self.catalog.get(kind, name).get("state")
            out.append(item)
        return out

    # -- twins -----------------------------------------------------------------

    def fit_twin(self, name: str, experiment: str, kind: str = "simple") -> TwinModel:
        doc = self.catalog.get(Kind.EXPERIMENT, experiment)
        result = doc.get("result")
        if not result:
            raise ValidationError(f"experiment {experiment!r} has no result to fit")
        if kind == "quickscaling":
            model = twinfit.fit_quickscaling(result)
        else:
            model = twinfit.fit_simple(result)
        self.catalog.put(Kind.TWIN, name, model.to_dict())
        return model

    # -- traffic ------------------------------------------------------------------

    def preview_traffic(self, body_or_name: dict | str) -> list[float]:
        if isinstance(body_or_name, str):
            model = traffic.TrafficModel.from_dict(self.catalog.get(Kind.TRAFFIC, body_or_name))
        else:
            model = traffic.TrafficModel.from_dict(body_or_name)
        return traffic.project_year(model)

    # -- simulations ----------------------------------------------------------------

    def _simulation_dir(self, name: str, version: int) -> Path:
        return self.data_dir / "simulations" / f"{name}-v{version}"

    def run_simulation(self, name: str, config: dict | SimulationConfig) -> dict:
        if isinstance(config, dict):
            config = SimulationConfig.from_dict(config)
        if config.twin is None or config.traffic is None:
            raise ValidationError("simulation needs twin and traffic references")
        twin = TwinModel.from_dict(self.catalog.resolve(config.twin))
        model = traffic.TrafficModel.from_dict(self.catalog.resolve(config.traffic))
        loads = traffic.project_year(model)
        result = simulator.simulate(twin, loads, config)
        body = {"config": config.to_dict(), "summary": result.summary,
                "monthly": result.monthly}
        ref = self.catalog.put(Kind.SIMULATION, name, body, validate=False)
        out_dir = self._simulation_dir(name, ref.version)
        out_dir.mkdir(parents=True, exist_ok=True)
        hourly = reporting.Table(
            columns=["hour", "arrivals", "processed", "queue_end", "latency_s",
                     "cost_minor", "net_cost_minor"],
            rows=[[h, result.arrivals[h], result.processed[h], result.queue_end[h],
                   result.latency_s[h], result.cost_minor[h], result.net_cost_minor[h]]
                  for h in range(len(result.arrivals))])
        (out_dir / "hourly.csv").write_text(reporting.render_csv(hourly), encoding="utf-8")
        daily = reporting.Table(
            columns=["day", "volume_gb", "stored_gb", "storage_cost_minor"],
            rows=[[d, result.daily_volume_gb[d], result.daily_stored_gb[d],
                   result.daily_storage_cost_minor[d]]
                  for d in range(len(result.daily_volume_gb))])
        (out_dir / "daily.csv").write_text(reporting.render_csv(daily), encoding="utf-8")
        return {"name": name, "version": ref.version, "summary": result.summary,
                "monthly": result.monthly}

    def get_simulation(self, name: str, version: int | None = None) -> dict:
        body = self.catalog.get(Kind.SIMULATION, name, version)
        return {"name": name, "config": body.get("config"),
                "summary": body.get("summary"), "monthly": body.get("monthly")}

    def simulation_hourly(self, name: str, version: int | None = None) -> dict:
        if version is None:
            version = self.catalog.latest_version(Kind.SIMULATION, name)
        path = self._simulation_dir(name, version) / "hourly.csv"
        if not path.exists():
            raise UnknownEntityError(f"simulation {name} v{version} has no hourly data")
        table = reporting.parse_csv(path.read_text(encoding="utf-8"))
        cols = {c: i for i, c in enumerate(table.columns)}
        return {c: [row[i] for row in table.rows] for c, i in cols.items()}

    def rerun_simulation_result(self, name: str, version: int | None = None) -> SimulationResult:
        """Recompute the full result from the stored config (deterministic)."""
        body = self.catalog.get(Kind.SIMULATION, name, version)
        config = SimulationConfig.from_dict(body["config"])
        twin = TwinModel.from_dict(self.catalog.resolve(config.twin))
        model = traffic.TrafficModel.from_dict(self.catalog.resolve(config.traffic))
        return simulator.simulate(twin, traffic.project_year(model), config)

    # -- datasets ----------------------------------------------------------------

    def dataset_manifest(self, name: str, version: int | None = None) -> dict:
        ref = EntityRef(Kind.DATASET, name, version)
        dataset = self.orchestrator.build_or_load_dataset(ref)
        return dataset.manifest

    def estimate_record_size_mb(self, dataset_name: str, version: int | None = None) -> float:
        ref = EntityRef(Kind.DATASET, dataset_name, version)
        return datagen.estimate_record_size_mb(self.orchestrator.build_or_load_dataset(ref))

    # -- experiment reporting --------------------------------------------------------

    def experiment_results(self, names: list[str]) -> list[tuple[str, dict | None]]:
        out = []
        for name in names:
            try:
                doc = self.catalog.get(Kind.EXPERIMENT, name)
            except UnknownEntityError:
                out.append((name, None))
                continue
            result = doc.get("result") or {}
            if result:
                result = dict(result)
                result.setdefault("state", doc.get("state"))
            out.append((name, result or None))
        return out
