"""Versioned registry of named harness entities.

Every entity the harness works with (schemas, datasets, load patterns,
pipelines, experiments, twins, traffic models, simulations) is stored here
as an append-only sequence of JSON documents, one file per (kind, name).
Versions start at 1 and grow by one on every put; deletes append a
tombstone so history stays readable and experiments stay reproducible.

Pipeline engagement (the exclusive lock held while an experiment runs) is
implemented with O_EXCL lock files so that exactly one of N concurrent
callers wins.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from urllib.parse import urlparse


class Kind(str, Enum):
    SCHEMA = "schema"
    DATASET = "dataset"
    LOADPATTERN = "loadpattern"
    PIPELINE = "pipeline"
    EXPERIMENT = "experiment"
    TWIN = "twin"
    TRAFFIC = "traffic"
    SIMULATION = "simulation"


_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


class CatalogError(Exception):
    """Base class for registry failures."""


class ValidationError(CatalogError):
    """Entity body failed validation. ``field`` points at the offending field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.message = message
        self.field = field


class UnknownEntityError(CatalogError):
    pass


class EngagedError(CatalogError):
    """Pipeline is already engaged by another experiment."""


@dataclass(frozen=True)
class EntityRef:
    kind: Kind
    name: str
    version: int | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "name": self.name}
        if self.version is not None:
            d["version"] = self.version
        return d

    @classmethod
    def from_dict(cls, d: dict, field_name: str = "ref") -> "EntityRef":
        if not isinstance(d, dict):
            raise ValidationError("expected an object with kind/name", field_name)
        try:
            kind = Kind(d["kind"])
        except (KeyError, ValueError):
            raise ValidationError("unknown entity kind", f"{field_name}.kind")
        name = d.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("name must be a nonempty string", f"{field_name}.name")
        version = d.get("version")
        if version is not None and (not isinstance(version, int) or version < 1):
            raise ValidationError("version must be a positive integer", f"{field_name}.version")
        return cls(kind=kind, name=name, version=version)


@dataclass
class PipelineSpec:
    """Endpoint and billing identity of a pipeline-under-test.

    ``engaged`` is runtime state derived from the engagement lock, not part
    of the stored document.
    """

    name: str
    ingest_endpoint: str
    metrics_endpoint: str = ""
    protocol: str = "http-post"
    cost_tags: list[str] = field(default_factory=list)
    engaged: bool = False

    @classmethod
    def from_dict(cls, body: dict) -> "PipelineSpec":
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("name must be a nonempty string", "name")
        ingest = body.get("ingest_endpoint")
        _require_url(ingest, "ingest_endpoint")
        metrics = body.get("metrics_endpoint", "")
        if metrics:
            _require_url(metrics, "metrics_endpoint")
        protocol = body.get("protocol", "http-post")
        if protocol != "http-post":
            raise ValidationError("only http-post is supported", "protocol")
        tags = body.get("cost_tags", [])
        if not isinstance(tags, list) or any(not isinstance(t, str) or not t for t in tags):
            raise ValidationError("cost_tags must be a list of nonempty strings", "cost_tags")
        return cls(name=name, ingest_endpoint=ingest, metrics_endpoint=metrics,
                   protocol=protocol, cost_tags=list(tags))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ingest_endpoint": self.ingest_endpoint,
            "metrics_endpoint": self.metrics_endpoint,
            "protocol": self.protocol,
            "cost_tags": list(self.cost_tags),
        }


def _require_url(value, field_name: str) -> None:
    if not isinstance(value, str):
        raise ValidationError("must be a URL string", field_name)
    parsed = urlparse(value)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise ValidationError(f"not a valid http(s) URL: {value!r}", field_name)


def _validate_body(kind: Kind, body: dict) -> None:
    """Validate ``body`` against the schema for its kind.

    Domain modules own their own parsing; importing them lazily here keeps
    catalog free of import cycles.
    """
    if not isinstance(body, dict):
        raise ValidationError("entity body must be an object")
    if kind is Kind.SCHEMA:
        from . import datagen
        datagen.SchemaSpec.from_dict(body)
    elif kind is Kind.DATASET:
        from . import datagen
        datagen.DataSetSpec.from_dict(body)
    elif kind is Kind.LOADPATTERN:
        from . import loadgen
        loadgen.LoadPattern.from_dict(body)
    elif kind is Kind.PIPELINE:
        PipelineSpec.from_dict(body)
    elif kind is Kind.EXPERIMENT:
        from . import orchestrator
        orchestrator.ExperimentSpec.from_dict(body.get("spec", body))
    elif kind is Kind.TWIN:
        from . import twinfit
        twinfit.TwinModel.from_dict(body)
    elif kind is Kind.TRAFFIC:
        from . import traffic
        traffic.TrafficModel.from_dict(body)
    elif kind is Kind.SIMULATION:
        from . import simulator
        simulator.SimulationConfig.from_dict(body.get("config", body))


class Catalog:
    """Directory-backed entity store, safe for concurrent in-process use."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = Path(data_dir)
        self._locks: dict[tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()
        (self.data_dir / "catalog").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "engaged").mkdir(parents=True, exist_ok=True)

    # -- paths ------------------------------------------------------------

    def _entity_path(self, kind: Kind, name: str) -> Path:
        return self.data_dir / "catalog" / kind.value / f"{name}.jsonl"

    def _lock_for(self, kind: Kind, name: str) -> threading.Lock:
        key = (kind.value, name)
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    def _read_lines(self, kind: Kind, name: str) -> list[dict]:
        path = self._entity_path(kind, name)
        if not path.exists():
            return []
        out = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    # -- CRUD -------------------------------------------------------------

    def put(self, kind: Kind, name: str, body: dict, validate: bool = True) -> EntityRef:
        """Store a new version of (kind, name); returns the assigned ref."""
        if not _NAME_RE.match(name or ""):
            raise ValidationError(
                "names must be nonempty and use only letters, digits, '.', '_', '-'", "name")
        if validate:
            _validate_body(kind, body)
        with self._lock_for(kind, name):
            lines = self._read_lines(kind, name)
            version = (lines[-1]["version"] + 1) if lines else 1
            path = self._entity_path(kind, name)
            path.parent.mkdir(parents=True, exist_ok=True)
            record = {"version": version, "body": body}
            with path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return EntityRef(kind=kind, name=name, version=version)

    def get(self, kind: Kind, name: str, version: int | None = None) -> dict:
        """Return the body of the requested (or latest live) version."""
        lines = self._read_lines(kind, name)
        if not lines:
            raise UnknownEntityError(f"{kind.value}/{name} does not exist")
        if version is not None:
            for line in lines:
                if line["version"] == version and not line.get("tombstone"):
                    return line["body"]
            raise UnknownEntityError(f"{kind.value}/{name} has no version {version}")
        last = lines[-1]
        if last.get("tombstone"):
            raise UnknownEntityError(f"{kind.value}/{name} is deleted")
        return last["body"]

    def resolve(self, ref: EntityRef) -> dict:
        return self.get(ref.kind, ref.name, ref.version)

    def latest_version(self, kind: Kind, name: str) -> int:
        lines = self._read_lines(kind, name)
        if not lines or lines[-1].get("tombstone"):
            raise UnknownEntityError(f"{kind.value}/{name} does not exist")
        return lines[-1]["version"]

    def exists(self, kind: Kind, name: str) -> bool:
        lines = self._read_lines(kind, name)
        return bool(lines) and not lines[-1].get("tombstone")

    def list(self, kind: Kind) -> list[tuple[str, int]]:
        """(name, latest_version) pairs for live entities, sorted by name."""
        kind_dir = self.data_dir / "catalog" / kind.value
        if not kind_dir.exists():
            return []
        out = []
        for path in sorted(kind_dir.glob("*.jsonl")):
            name = path.stem
            lines = self._read_lines(kind, name)
            if lines and not lines[-1].get("tombstone"):
                out.append((name, lines[-1]["version"]))
        return out

    def delete(self, kind: Kind, name: str) -> None:
        """Hide the entity from listings. Prior versions stay readable."""
        with self._lock_for(kind, name):
            lines = self._read_lines(kind, name)
            if not lines or lines[-1].get("tombstone"):
                raise UnknownEntityError(f"{kind.value}/{name} does not exist")
            version = lines[-1]["version"] + 1
            record = {"version": version, "tombstone": True, "body": {}}
            with self._entity_path(kind, name).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- pipeline engagement ----------------------------------------------

    def _engagement_path(self, pipeline_name: str) -> Path:
        return self.data_dir / "engaged" / f"{pipeline_name}.lock"

    def engage(self, pipeline_name: str, holder: str) -> bool:
        """Atomically claim the pipeline. True on ok, False when busy."""
        if not self.exists(Kind.PIPELINE, pipeline_name):
            raise UnknownEntityError(f"pipeline/{pipeline_name} does not exist")
        path = self._engagement_path(pipeline_name)
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            return False
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(holder)
        return True

    def release(self, pipeline_name: str, holder: str | None = None) -> None:
        path = self._engagement_path(pipeline_name)
        if not path.exists():
            return
        if holder is not None and path.read_text(encoding="utf-8") != holder:
            raise EngagedError(f"pipeline/{pipeline_name} is held by another experiment")
        path.unlink(missing_ok=True)

    def engaged_holder(self, pipeline_name: str) -> str | None:
        path = self._engagement_path(pipeline_name)
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None

    def pipeline_engaged(self, pipeline_name: str) -> bool:
        return self._engagement_path(pipeline_name).exists()
