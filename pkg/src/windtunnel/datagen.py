"""Synthetic record generation and dataset packaging.

Records are produced by a pure function of (schema, seed, index): every
record gets its own RNG seeded with ``seed XOR index`` so records can be
generated out of order or in parallel and two builds of the same spec are
byte-identical. Field kinds cover the usual telemetry shapes: bounded ints
and floats, template strings, choices, timestamps, and lat/long points
constrained to a bounding box (uniform sampling over the whole planet would
mostly produce points in the ocean, which a geo-aware pipeline would never
see).

Datasets render records to files (CSV or a length-prefixed raw encoding)
and optionally bundle them into zip archives with a configurable fan-in of
files per archive.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import re
import string
import zipfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .catalog import EntityRef, Kind, ValidationError

FIELD_KINDS = ("int", "float", "string-pattern", "choice", "timestamp", "latlong")

# Fixed archive member timestamp so identical specs produce identical bytes.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


class GenerationError(Exception):
    """A field constraint cannot be satisfied."""


def _parse_ts(value, field_name: str) -> float:
    """Accept epoch seconds or RFC 3339 strings; return epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            raise ValidationError(f"not a timestamp: {value!r}", field_name)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError("timestamp must be a number or RFC 3339 string", field_name)


@dataclass
class FieldSpec:
    name: str
    kind: str
    constraint: dict

    @classmethod
    def from_dict(cls, d: dict, idx: int) -> "FieldSpec":
        where = f"fields[{idx}]"
        name = d.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("field name must be a nonempty string", f"{where}.name")
        kind = d.get("kind")
        if kind not in FIELD_KINDS:
            raise ValidationError(f"kind must be one of {FIELD_KINDS}", f"{where}.kind")
        constraint = d.get("constraint", {})
        if not isinstance(constraint, dict):
            raise ValidationError("constraint must be an object", f"{where}.constraint")
        spec = cls(name=name, kind=kind, constraint=constraint)
        spec._validate(where)
        return spec

    def _validate(self, where: str) -> None:
        c = self.constraint
        if self.kind in ("int", "float"):
            lo, hi = c.get("min"), c.get("max")
            if lo is None or hi is None:
                raise ValidationError("numeric fields need min and max", f"{where}.constraint")
            if lo > hi:
                raise ValidationError("min must be <= max", f"{where}.constraint")
        elif self.kind == "choice":
            choices = c.get("choices")
            if not isinstance(choices, list) or not choices:
                raise ValidationError("choice list must be nonempty", f"{where}.constraint.choices")
        elif self.kind == "string-pattern":
            if not isinstance(c.get("pattern"), str) or not c["pattern"]:
                raise ValidationError("pattern must be a nonempty string", f"{where}.constraint.pattern")
        elif self.kind == "timestamp":
            lo = _parse_ts(c.get("min", 0), f"{where}.constraint.min")
            hi = _parse_ts(c.get("max", 0), f"{where}.constraint.max")
            if lo > hi:
                raise ValidationError("min must be <= max", f"{where}.constraint")
        elif self.kind == "latlong":
            for key in ("lat_min", "lat_max", "lon_min", "lon_max"):
                if not isinstance(c.get(key), (int, float)):
                    raise ValidationError(f"bounding box needs numeric {key}", f"{where}.constraint")
            if c["lat_min"] > c["lat_max"] or c["lon_min"] > c["lon_max"]:
                raise ValidationError("bounding box is inverted", f"{where}.constraint")

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "constraint": self.constraint}


@dataclass
class SchemaSpec:
    name: str
    fields: list[FieldSpec]

    @classmethod
    def from_dict(cls, body: dict) -> "SchemaSpec":
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ValidationError("schema name must be a nonempty string", "name")
        raw = body.get("fields")
        if not isinstance(raw, list) or not raw:
            raise ValidationError("schema needs at least one field", "fields")
        fields = [FieldSpec.from_dict(f, i) for i, f in enumerate(raw)]
        seen = set()
        for i, f in enumerate(fields):
            if f.name in seen:
                raise ValidationError(f"duplicate field name {f.name!r}", f"fields[{i}].name")
            seen.add(f.name)
        return cls(name=name, fields=fields)

    def to_dict(self) -> dict:
        return {"name": self.name, "fields": [f.to_dict() for f in self.fields]}

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]


@dataclass
class DataSetSpec:
    schema: EntityRef
    record_count: int
    format: str = "csv"
    compression: str = "zip"
    files_per_archive: int = 5
    seed: int = 0

    @classmethod
    def from_dict(cls, body: dict) -> "DataSetSpec":
        schema = EntityRef.from_dict(body.get("schema", {}), "schema")
        if schema.kind is not Kind.SCHEMA:
            raise ValidationError("must reference a schema", "schema.kind")
        count = body.get("record_count")
        if not isinstance(count, int) or count < 1:
            raise ValidationError("record_count must be a positive integer", "record_count")
        fmt = body.get("format", "csv")
        if fmt not in ("csv", "raw-bytes"):
            raise ValidationError("format must be csv or raw-bytes", "format")
        comp = body.get("compression", "zip")
        if comp not in ("zip", "none"):
            raise ValidationError("compression must be zip or none", "compression")
        fan_in = body.get("files_per_archive", 5)
        if not isinstance(fan_in, int) or fan_in < 1:
            raise ValidationError("files_per_archive must be a positive integer", "files_per_archive")
        seed = body.get("seed", 0)
        if not isinstance(seed, int):
            raise ValidationError("seed must be an integer", "seed")
        return cls(schema=schema, record_count=count, format=fmt, compression=comp,
                   files_per_archive=fan_in, seed=seed)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.to_dict(),
            "record_count": self.record_count,
            "format": self.format,
            "compression": self.compression,
            "files_per_archive": self.files_per_archive,
            "seed": self.seed,
        }


# -- record generation ---------------------------------------------------


def generate_record(schema: SchemaSpec, seed: int, index: int) -> list:
    """Generate one record as ordered field values.

    Pure in (schema, seed, index); see module docstring for the seeding
    scheme.
    """
    rng = random.Random((seed ^ index) & 0xFFFFFFFFFFFFFFFF)
    return [_generate_field(f, rng) for f in schema.fields]


def _generate_field(spec: FieldSpec, rng: random.Random):
    c = spec.constraint
    if spec.kind == "int":
        lo, hi = c["min"], c["max"]
        if lo > hi:
            raise GenerationError(f"empty int range for {spec.name}")
        return rng.randint(int(lo), int(hi))
    if spec.kind == "float":
        lo, hi = float(c["min"]), float(c["max"])
        if lo > hi:
            raise GenerationError(f"empty float range for {spec.name}")
        return rng.uniform(lo, hi)
    if spec.kind == "choice":
        choices = c["choices"]
        if not choices:
            raise GenerationError(f"empty choice list for {spec.name}")
        return rng.choice(choices)
    if spec.kind == "string-pattern":
        return _expand_pattern(c["pattern"], rng)
    if spec.kind == "timestamp":
        lo = int(_parse_ts(c.get("min", 0), spec.name))
        hi = int(_parse_ts(c.get("max", 0), spec.name))
        if lo > hi:
            raise GenerationError(f"empty timestamp range for {spec.name}")
        epoch = rng.randint(lo, hi)
        return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    if spec.kind == "latlong":
        lat = rng.uniform(float(c["lat_min"]), float(c["lat_max"]))
        lon = rng.uniform(float(c["lon_min"]), float(c["lon_max"]))
        return f"{lat!r},{lon!r}"
    raise GenerationError(f"unknown field kind {spec.kind!r}")


def _expand_pattern(pattern: str, rng: random.Random) -> str:
    """'?' draws a letter, '#' a digit, anything else is literal."""
    out = []
    for ch in pattern:
        if ch == "?":
            out.append(rng.choice(string.ascii_letters))
        elif ch == "#":
            out.append(rng.choice(string.digits))
        else:
            out.append(ch)
    return "".join(out)


def pattern_regex(pattern: str) -> "re.Pattern[str]":
    """Regex accepting exactly the strings ``_expand_pattern`` can emit."""
    parts = []
    for ch in pattern:
        if ch == "?":
            parts.append("[A-Za-z]")
        elif ch == "#":
            parts.append("[0-9]")
        else:
            parts.append(re.escape(ch))
    return re.compile("^" + "".join(parts) + "$")


# -- rendering -----------------------------------------------------------


def record_to_csv_bytes(schema: SchemaSpec, values: list) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(schema.field_names())
    writer.writerow(["" if v is None else v for v in values])
    return buf.getvalue().encode("utf-8")


def record_to_raw_bytes(values: list) -> bytes:
    """Length-prefixed field values: [len:u32 BE][utf-8 bytes] per field."""
    out = bytearray()
    for v in values:
        data = str(v).encode("utf-8")
        out += len(data).to_bytes(4, "big")
        out += data
    return bytes(out)


# -- datasets ------------------------------------------------------------


@dataclass
class DataSet:
    """Built payloads plus the manifest describing them."""

    spec: DataSetSpec
    schema: SchemaSpec
    payloads: list[tuple[str, bytes]]
    manifest: dict

    @property
    def content_type(self) -> str:
        if self.spec.compression == "zip":
            return "application/zip"
        return "text/csv" if self.spec.format == "csv" else "application/octet-stream"

    def payload_bytes(self) -> list[bytes]:
        return [blob for _, blob in self.payloads]

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, blob in self.payloads:
            (out / name).write_bytes(blob)
        (out / "manifest.json").write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return out

    @classmethod
    def load(cls, in_dir: str | Path, schema: SchemaSpec | None = None) -> "DataSet":
        in_dir = Path(in_dir)
        manifest = json.loads((in_dir / "manifest.json").read_text(encoding="utf-8"))
        spec = DataSetSpec.from_dict(manifest["spec"])
        payloads = [(p["name"], (in_dir / p["name"]).read_bytes()) for p in manifest["payloads"]]
        if schema is None:
            schema = SchemaSpec.from_dict(manifest["schema"])
        return cls(spec=spec, schema=schema, payloads=payloads, manifest=manifest)


def build_dataset(spec: DataSetSpec, schema: SchemaSpec) -> DataSet:
    """Render `record_count` record files, pack them, compute the manifest.

    With zip compression, ceil(record_count / files_per_archive) archives
    are produced; each archive holds files_per_archive record files (the
    last may be short). Without compression every record file is its own
    payload.
    """
    ext = "csv" if spec.format == "csv" else "bin"
    files: list[tuple[str, bytes]] = []
    total_uncompressed = 0
    for index in range(spec.record_count):
        values = generate_record(schema, spec.seed, index)
        if spec.format == "csv":
            blob = record_to_csv_bytes(schema, values)
        else:
            blob = record_to_raw_bytes(values)
        total_uncompressed += len(blob)
        files.append((f"{schema.name}-{index:06d}.{ext}", blob))

    payloads: list[tuple[str, bytes]] = []
    if spec.compression == "zip":
        fan_in = spec.files_per_archive
        n_archives = math.ceil(spec.record_count / fan_in)
        for a in range(n_archives):
            chunk = files[a * fan_in:(a + 1) * fan_in]
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w") as zf:
                for name, blob in chunk:
                    info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
                    info.compress_type = zipfile.ZIP_DEFLATED
                    zf.writestr(info, blob)
            payloads.append((f"payload-{a:05d}.zip", buf.getvalue()))
    else:
        payloads = files

    total_payload = sum(len(blob) for _, blob in payloads)
    manifest = {
        "spec": spec.to_dict(),
        "schema": schema.to_dict(),
        "record_count": spec.record_count,
        "payload_count": len(payloads),
        "total_payload_bytes": total_payload,
        "mean_payload_bytes": total_payload / len(payloads),
        "total_uncompressed_bytes": total_uncompressed,
        "payloads": [{"name": name, "bytes": len(blob)} for name, blob in payloads],
    }
    return DataSet(spec=spec, schema=schema, payloads=payloads, manifest=manifest)


def estimate_record_size_mb(dataset: DataSet) -> float:
    """Mean uncompressed record size in MB (MiB), for network/storage costing."""
    count = dataset.manifest["record_count"]
    if count <= 0:
        raise GenerationError("dataset is empty")
    return dataset.manifest["total_uncompressed_bytes"] / count / 2**20
