"""Hourly load projection for a planning year.

A traffic model turns four business inputs — start-of-year rate, annual
growth, monthly seasonality, and an hour-of-week profile — into 8760
hourly rates:

    load_h = R * (1 + dayofyear(h) * G / 365) * H[dow(h), hour(h)] * M[month(h)]

G is fractional growth (0 = flat year, 0.5 = +50% by day 365, -0.25 = a
quarter of the fleet retired). Inputs that express growth as an end/start
multiplier are accepted under the ``growth_multiplier`` key and mapped to
G = multiplier - 1.

The calendar is a fixed non-leap year of 8760 hours whose hour 0 is
Monday, January 1st, 00:00.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .catalog import ValidationError

MONTH_LENGTHS = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]
DAYS_PER_YEAR = 365
HOURS_PER_YEAR = 8760

# month index for each 1-based day of year
_DAY_MONTH = []
for _m, _len in enumerate(MONTH_LENGTHS):
    _DAY_MONTH.extend([_m] * _len)


def month_of_day(day_of_year: int) -> int:
    """0-based month for a 1-based day of year."""
    return _DAY_MONTH[day_of_year - 1]


@dataclass
class TrafficModel:
    r_rps: float
    growth: float = 0.0
    monthly: list[float] | None = None    # 12 factors, January first
    hourly: list[float] | None = None     # 168 factors, index dow*24+hour, Monday=0

    def __post_init__(self):
        if self.monthly is None:
            self.monthly = [1.0] * 12
        if self.hourly is None:
            self.hourly = [1.0] * 168

    @classmethod
    def from_dict(cls, body: dict) -> "TrafficModel":
        r = body.get("r_rps", body.get("R"))
        if not isinstance(r, (int, float)) or isinstance(r, bool) or not math.isfinite(r) or r < 0:
            raise ValidationError("r_rps must be a finite number >= 0", "r_rps")
        if "growth_multiplier" in body:
            mult = body["growth_multiplier"]
            if not isinstance(mult, (int, float)) or not math.isfinite(mult) or mult < 0:
                raise ValidationError("growth_multiplier must be a finite number >= 0",
                                      "growth_multiplier")
            g = float(mult) - 1.0
        else:
            g = body.get("growth", body.get("G", 0.0))
        if not isinstance(g, (int, float)) or not math.isfinite(g) or g < -1:
            raise ValidationError("growth must be finite and >= -1", "growth")
        monthly = body.get("monthly", body.get("M", [1.0] * 12))
        hourly = body.get("hourly", body.get("H", [1.0] * 168))
        _check_factors(monthly, 12, "monthly")
        _check_factors(hourly, 168, "hourly")
        return cls(r_rps=float(r), growth=float(g),
                   monthly=[float(v) for v in monthly],
                   hourly=[float(v) for v in hourly])

    def to_dict(self) -> dict:
        return {"r_rps": self.r_rps, "growth": self.growth,
                "monthly": list(self.monthly), "hourly": list(self.hourly)}


def _check_factors(values, expected_len: int, field_name: str) -> None:
    if not isinstance(values, list) or len(values) != expected_len:
        raise ValidationError(f"must be a list of exactly {expected_len} factors", field_name)
    for i, v in enumerate(values):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v) or v < 0:
            raise ValidationError("factors must be finite numbers >= 0", f"{field_name}[{i}]")


def project_year(model: TrafficModel) -> list[float]:
    """8760 hourly rates (records/s) from the model's formula."""
    loads = []
    for h in range(HOURS_PER_YEAR):
        day_of_year = h // 24 + 1
        hour = h % 24
        dow = (day_of_year - 1) % 7
        growth_factor = 1.0 + day_of_year * model.growth / DAYS_PER_YEAR
        loads.append(model.r_rps * growth_factor
                     * model.hourly[dow * 24 + hour]
                     * model.monthly[month_of_day(day_of_year)])
    return loads


def arrivals_per_hour(loads: list[float]) -> list[float]:
    """Hourly record counts; kept fractional so totals stay exact."""
    return [rate * 3600.0 for rate in loads]


# -- example scenarios ----------------------------------------------------
#
# Illustrative factor vectors for a connected-vehicle fleet: seasonal
# minimum 0.84 in January rising to 1.14 in August, and an hour-of-week
# profile spanning 0.04 (Wednesday 06:00) to 2.26 (Friday 20:00). Only
# those endpoints are anchored to measurements; interior values are plain
# interpolation.

_DOW_WEIGHT = [1.0, 1.0, 0.8, 1.0, 1.3, 1.1, 0.9]          # Monday..Sunday
_DAY_ANCHORS = [(0, 0.12), (3, 0.06), (6, 0.05), (9, 0.35), (12, 0.4),
                (15, 0.45), (18, 0.85), (20, 2.26 / 1.3), (22, 0.3), (24, 0.12)]


def _day_shape(hour: int) -> float:
    for (h0, v0), (h1, v1) in zip(_DAY_ANCHORS, _DAY_ANCHORS[1:]):
        if h0 <= hour <= h1:
            if h1 == h0:
                return v0
            return v0 + (v1 - v0) * (hour - h0) / (h1 - h0)
    return _DAY_ANCHORS[-1][1]


def example_monthly_factors() -> list[float]:
    out = []
    for m in range(12):
        if m <= 7:
            out.append(0.84 + 0.30 * m / 7)
        else:
            out.append(1.14 - 0.30 * (m - 7) / 5)
    return out


def example_hourly_factors() -> list[float]:
    return [_DOW_WEIGHT[dow] * _day_shape(hour)
            for dow in range(7) for hour in range(24)]


def example_nominal(r_rps: float = 3.5) -> TrafficModel:
    """Stable fleet over the year."""
    return TrafficModel(r_rps=r_rps, growth=0.0,
                        monthly=example_monthly_factors(),
                        hourly=example_hourly_factors())


def example_high(r_rps: float = 3.5) -> TrafficModel:
    """Same fleet with 50% growth in installed vehicles by year end."""
    return TrafficModel(r_rps=r_rps, growth=0.5,
                        monthly=example_monthly_factors(),
                        hourly=example_hourly_factors())
