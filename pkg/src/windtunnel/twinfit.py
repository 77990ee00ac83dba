"""Fit a twin model of a pipeline from one completed experiment.

The twin is deliberately small: the apparent sustained capacity (records
sent divided by the time it took the pipeline to fully process them), a
flat hourly cost rate, and the no-queueing base latency. A ``simple`` twin
drains a FIFO queue at fixed capacity; a ``quickscaling`` twin assumes
horizontal scaling absorbs any load instantly and only the cost model
differs. Both reuse the same fitted numbers — the simulator is what treats
them differently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .catalog import ValidationError

TWIN_KINDS = ("simple", "quickscaling")


class FitError(Exception):
    """The experiment cannot back a twin (failed, empty, or zero-length)."""


@dataclass
class TwinModel:
    kind: str
    capacity_rps: float
    cost_rate_minor_per_hr: float
    base_latency_s: float
    policy: str = "fifo"

    @classmethod
    def from_dict(cls, body: dict) -> "TwinModel":
        kind = body.get("kind", "simple")
        if kind not in TWIN_KINDS:
            raise ValidationError(f"kind must be one of {TWIN_KINDS}", "kind")
        cap = body.get("capacity_rps")
        if not isinstance(cap, (int, float)) or not math.isfinite(cap) or cap <= 0:
            raise ValidationError("capacity_rps must be a finite number > 0", "capacity_rps")
        rate = body.get("cost_rate_minor_per_hr", 0.0)
        if not isinstance(rate, (int, float)) or not math.isfinite(rate) or rate < 0:
            raise ValidationError("cost_rate_minor_per_hr must be >= 0", "cost_rate_minor_per_hr")
        base = body.get("base_latency_s", 0.0)
        if not isinstance(base, (int, float)) or not math.isfinite(base) or base < 0:
            raise ValidationError("base_latency_s must be >= 0", "base_latency_s")
        policy = body.get("policy", "fifo")
        if policy != "fifo":
            raise ValidationError("only fifo queueing is modeled", "policy")
        return cls(kind=kind, capacity_rps=float(cap), cost_rate_minor_per_hr=float(rate),
                   base_latency_s=float(base), policy=policy)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "capacity_rps": self.capacity_rps,
            "cost_rate_minor_per_hr": self.cost_rate_minor_per_hr,
            "base_latency_s": self.base_latency_s,
            "policy": self.policy,
        }


def _result_field(result: Any, name: str):
    if isinstance(result, dict):
        return result.get(name)
    return getattr(result, name, None)


def fit_simple(result: Any) -> TwinModel:
    """Capacity = sent/duration, cost rate = total*3600/duration, base
    latency = measured mean; all from a single completed experiment."""
    state = _result_field(result, "state")
    if state is not None and state != "Completed":
        raise FitError(f"experiment is {state}, need Completed")
    records = _result_field(result, "records_sent")
    duration = _result_field(result, "duration_s")
    if not records or records <= 0:
        raise FitError("experiment sent no records")
    if not duration or duration <= 0:
        raise FitError("experiment has zero duration")
    total_cost = _result_field(result, "total_cost_minor") or 0
    mean_latency = _result_field(result, "mean_latency_s") or 0.0
    return TwinModel(
        kind="simple",
        capacity_rps=records / duration,
        cost_rate_minor_per_hr=total_cost * 3600.0 / duration,
        base_latency_s=mean_latency,
    )


def fit_quickscaling(result: Any) -> TwinModel:
    """Same fitted numbers; the simulator adds replicas instead of queueing."""
    model = fit_simple(result)
    model.kind = "quickscaling"
    return model


def cost_per_record(model: TwinModel) -> float:
    """Minor units spent per record when running at capacity."""
    if model.capacity_rps <= 0:
        raise FitError("capacity must be positive")
    return model.cost_rate_minor_per_hr / (3600.0 * model.capacity_rps)
