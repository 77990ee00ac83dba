"""Billing records and experiment cost proration.

Cloud providers bill in hourly windows that rarely line up with an
experiment, so an experiment's cost is the sum over matching-tag records
of ``amount * overlap / window_length``. Records come from a CSV file or
the API (live provider fetchers stay pluggable behind that interface), are
deduplicated on (tag, window_start), and are kept in integer minor
currency units; only reports scale to major units.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .catalog import ValidationError


def parse_rfc3339(value) -> float:
    """RFC 3339 string (or epoch number) to epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ValidationError(f"not an RFC 3339 timestamp: {value!r}") from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError("timestamp must be a number or RFC 3339 string")


def format_rfc3339(epoch: float) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class BillingRecord:
    tag: str
    window_start: float
    window_end: float
    amount_minor: int

    @classmethod
    def from_dict(cls, d: dict, index: int = 0) -> "BillingRecord":
        tag = d.get("tag")
        if not isinstance(tag, str) or not tag:
            raise ValidationError(f"record {index}: tag must be a nonempty string")
        start = parse_rfc3339(d.get("window_start"))
        end = parse_rfc3339(d.get("window_end"))
        if end <= start:
            raise ValidationError(f"record {index}: window_end must be after window_start")
        amount = d.get("amount_minor")
        if isinstance(amount, float) and amount.is_integer():
            amount = int(amount)
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise ValidationError(f"record {index}: amount_minor must be an integer >= 0")
        return cls(tag=tag, window_start=start, window_end=end, amount_minor=amount)

    def to_dict(self) -> dict:
        return {"tag": self.tag,
                "window_start": format_rfc3339(self.window_start),
                "window_end": format_rfc3339(self.window_end),
                "amount_minor": self.amount_minor}


def parse_billing_csv(text: str) -> list[BillingRecord]:
    """CSV columns: tag,window_start,window_end,amount_minor (RFC 3339 times)."""
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for i, row in enumerate(rows):
        try:
            amount = int(row["amount_minor"])
        except (KeyError, ValueError):
            raise ValidationError(f"record {i}: amount_minor must be an integer")
        out.append(BillingRecord.from_dict({
            "tag": row.get("tag"),
            "window_start": row.get("window_start"),
            "window_end": row.get("window_end"),
            "amount_minor": amount,
        }, index=i))
    return out


def render_billing_csv(records: list[BillingRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tag", "window_start", "window_end", "amount_minor"])
    for r in records:
        writer.writerow([r.tag, format_rfc3339(r.window_start),
                         format_rfc3339(r.window_end), r.amount_minor])
    return buf.getvalue()


class BillingStore:
    """Deduplicated billing records with snapshot-consistent queries."""

    def __init__(self, data_dir: str | Path | None = None):
        self._records: dict[tuple[str, float], BillingRecord] = {}
        self._lock = threading.Lock()
        self._path: Path | None = None
        if data_dir is not None:
            self._path = Path(data_dir) / "billing.jsonl"
            if self._path.exists():
                for line in self._path.read_text(encoding="utf-8").splitlines():
                    if line.strip():
                        rec = BillingRecord.from_dict(json.loads(line))
                        self._records[(rec.tag, rec.window_start)] = rec

    def ingest(self, records: list[BillingRecord | dict]) -> int:
        """Append records (dedup on tag + window_start); returns store size.

        The whole batch is validated before anything is stored, so an
        inverted window is reported by index and stores nothing.
        """
        parsed = []
        for i, rec in enumerate(records):
            parsed.append(rec if isinstance(rec, BillingRecord)
                          else BillingRecord.from_dict(rec, index=i))
        with self._lock:
            fresh = []
            for rec in parsed:
                key = (rec.tag, rec.window_start)
                if key not in self._records:
                    self._records[key] = rec
                    fresh.append(rec)
            if self._path is not None and fresh:
                with self._path.open("a", encoding="utf-8") as fh:
                    for rec in fresh:
                        fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            return len(self._records)

    def snapshot(self) -> list[BillingRecord]:
        with self._lock:
            return list(self._records.values())

    def experiment_cost(self, tags: list[str], window_start: float, window_end: float) -> float:
        """Prorated minor units over the window for the given tags."""
        if window_end < window_start:
            raise ValidationError("window_end must be >= window_start")
        wanted = set(tags)
        total = 0.0
        for rec in self.snapshot():
            if rec.tag not in wanted:
                continue
            overlap = min(window_end, rec.window_end) - max(window_start, rec.window_start)
            if overlap <= 0:
                continue
            total += rec.amount_minor * overlap / (rec.window_end - rec.window_start)
        return total


def ingest_billing(store: BillingStore, records: list[BillingRecord | dict]) -> int:
    return store.ingest(records)


def experiment_cost(store: BillingStore, tags: list[str],
                    window_start: float, window_end: float) -> float:
    return store.experiment_cost(tags, window_start, window_end)
