import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windtunnel.simulator import (
    SLO,
    SimulationConfig,
    backlog_metrics,
    hour_latency,
    monthly_rollup,
    network_cost,
    simulate,
    step_simple,
    storage_cost,
)
from windtunnel.traffic import HOURS_PER_YEAR, TrafficModel, project_year
from windtunnel.twinfit import TwinModel

BLOCKING = TwinModel("simple", capacity_rps=1.95, cost_rate_minor_per_hr=0.82,
                     base_latency_s=0.15)
NON_BLOCKING = TwinModel("simple", capacity_rps=6.15, cost_rate_minor_per_hr=7.03,
                         base_latency_s=0.06)
QUICK = TwinModel("quickscaling", capacity_rps=6.15, cost_rate_minor_per_hr=7.03,
                  base_latency_s=0.06)


def flat_loads(rps: float) -> list[float]:
    return [rps] * HOURS_PER_YEAR


class TestStep:
    def test_underload(self):
        assert step_simple(0, 100, 200) == (100, 0)

    def test_overload_drains_queue_first(self):
        assert step_simple(50, 100, 120) == (120, 30)

    def test_idle(self):
        assert step_simple(0, 0, 100) == (0, 0)


class TestHourLatency:
    def test_empty_queue_is_base(self):
        assert hour_latency(0, 1.95, 0.15) == pytest.approx(0.15)

    def test_queue_drain_time_added(self):
        assert hour_latency(7020, 1.95, 0.15) == pytest.approx(3600.15)

    def test_quickscaling_always_base(self):
        assert hour_latency(99999, 1.95, 0.15, kind="quickscaling") == 0.15


class TestBacklog:
    def test_zero_queue(self):
        metrics = backlog_metrics(0.0, BLOCKING)
        assert metrics == {"backlog_latency_s": 0.0, "backlog_cost_minor": 0.0}

    def test_nominal_cpu_limited_backlog_days(self):
        assert round(35_130_437.72 / 86400, 1) == 406.6

    def test_high_cpu_limited_backlog_days(self):
        assert round(52_813_607.51 / 86400, 1) == 611.3

    def test_backlog_cost_is_drain_hours_at_rate(self):
        metrics = backlog_metrics(7020.0, BLOCKING)
        assert metrics["backlog_latency_s"] == pytest.approx(3600.0)
        assert metrics["backlog_cost_minor"] == pytest.approx(0.82)


class TestSimulate:
    def test_absorbed_traffic_flat_cloud_cost(self):
        result = simulate(BLOCKING, flat_loads(1.0), SimulationConfig())
        assert result.summary["cloud_cost_minor"] == pytest.approx(0.82 * 8760)
        assert result.summary["queue_end_of_year"] == 0.0
        assert all(v == pytest.approx(0.15) for v in result.latency_s)

    def test_quickscaling_meets_four_hour_slo(self):
        config = SimulationConfig(slos=[SLO("latency", 14400.0, 0.05)])
        result = simulate(QUICK, flat_loads(3.0), config)
        assert result.summary["pct_latency_met"] == 100.0
        assert result.summary["slo_met"] is True

    def test_quickscaling_pays_for_replicas(self):
        # arrivals = 2x capacity -> every hour costs twice the base rate
        result = simulate(QUICK, flat_loads(12.3), SimulationConfig())
        assert result.summary["cloud_cost_minor"] == pytest.approx(2 * 7.03 * 8760)

    def test_undercapacity_twin_never_recovers(self):
        loads = project_year(TrafficModel(r_rps=1.0, growth=1.0))   # 1 -> 2 rps
        twin = TwinModel("simple", capacity_rps=1.3, cost_rate_minor_per_hr=1.0,
                         base_latency_s=0.1)
        result = simulate(twin, loads, SimulationConfig())
        assert result.summary["queue_end_of_year"] > 0
        assert result.queue_end[-1] == max(result.queue_end)

    def test_saturation_bound_and_equality(self):
        result = simulate(BLOCKING, flat_loads(3.0), SimulationConfig())
        assert result.summary["max_thruput_rec_h"] <= 1.95 * 3600 + 1e-9
        assert result.summary["max_thruput_rec_h"] == pytest.approx(7020.0)

    def test_no_saturation_no_equality(self):
        result = simulate(BLOCKING, flat_loads(1.0), SimulationConfig())
        assert result.summary["max_thruput_rec_h"] < 1.95 * 3600

    def test_latency_trajectory_scale_invariant(self):
        loads = project_year(TrafficModel(r_rps=2.0, growth=0.3,
                                          hourly=[0.5, 2.5] * 84))
        twin_1x = TwinModel("simple", 1.0, 1.0, 0.1)
        twin_3x = TwinModel("simple", 3.0, 1.0, 0.1)
        r1 = simulate(twin_1x, loads, SimulationConfig())
        r3 = simulate(twin_3x, [3 * v for v in loads], SimulationConfig())
        for a, b in zip(r1.latency_s, r3.latency_s):
            assert b == pytest.approx(a, rel=1e-9)
        for qa, qb in zip(r1.queue_end, r3.queue_end):
            assert qb == pytest.approx(3 * qa, rel=1e-9, abs=1e-6)

    def test_pct_latency_met_nonincreasing_in_r(self):
        config = SimulationConfig(slos=[SLO("latency", 600.0, 0.001)])
        hourly = [0.2] * 168
        for h in range(120, 168):
            hourly[h] = 3.0
        previous = 101.0
        for r_rps in (0.5, 1.0, 2.0, 4.0, 8.0):
            loads = project_year(TrafficModel(r_rps=r_rps, hourly=hourly))
            result = simulate(BLOCKING, loads, config)
            assert result.summary["pct_latency_met"] <= previous + 1e-9
            previous = result.summary["pct_latency_met"]

    def test_determinism_bit_identical(self):
        loads = project_year(TrafficModel(r_rps=3.5, growth=0.5,
                                          hourly=[0.1, 2.9] * 84))
        a = simulate(BLOCKING, loads, SimulationConfig())
        b = simulate(BLOCKING, loads, SimulationConfig())
        assert a.queue_end == b.queue_end
        assert a.latency_s == b.latency_s
        assert a.summary == b.summary

    def test_error_rate_slo_vacuously_true(self):
        config = SimulationConfig(slos=[SLO("error-rate", 1.0, 0.0)])
        result = simulate(BLOCKING, flat_loads(5.0), config)
        assert result.summary["slo_met"] is True

    def test_wrong_load_count_rejected(self):
        from windtunnel.catalog import ValidationError
        with pytest.raises(ValidationError):
            simulate(BLOCKING, [1.0] * 100, SimulationConfig())

    @given(r_rps=st.floats(0.01, 12.0), growth=st.floats(-0.9, 2.0),
           capacity=st.floats(0.05, 10.0), seed=st.integers(0, 10**6))
    @settings(max_examples=25, deadline=None)
    def test_conservation(self, r_rps, growth, capacity, seed):
        rng = random.Random(seed)
        model = TrafficModel(r_rps=r_rps, growth=growth,
                             monthly=[rng.uniform(0, 3) for _ in range(12)],
                             hourly=[rng.uniform(0, 3) for _ in range(168)])
        twin = TwinModel("simple", capacity, 1.0, 0.1)
        result = simulate(twin, project_year(model), SimulationConfig())
        total_in = result.summary["arrivals_total"]
        total_out = result.summary["processed_total"] + result.summary["queue_end_of_year"]
        assert total_out == pytest.approx(total_in, rel=1e-6)


class TestNetworkCost:
    def test_zero_record_size(self):
        assert network_cost(10**9, 0.0, 0.02) == 0.0

    def test_yearly_volume(self):
        assert network_cost(44_100_000, 0.00068, 0.02) == pytest.approx(599.76)

    def test_linear_in_record_size(self):
        assert network_cost(1000, 2.0, 0.5) == 2 * network_cost(1000, 1.0, 0.5)


class TestStorageCost:
    def test_rolling_window_unrolled_by_hand(self):
        per_day, total = storage_cost([1.0] * 10, retention_days=3, rate_minor_per_gb_day=1.0)
        assert per_day == pytest.approx([1, 2, 3, 3, 3, 3, 3, 3, 3, 3])
        assert total == pytest.approx(27.0)

    def test_zero_retention_costs_nothing(self):
        _, total = storage_cost([5.0] * 30, retention_days=0, rate_minor_per_gb_day=1.0)
        assert total == 0.0

    def test_longer_retention_diverges_after_window(self):
        volumes = [2.0] * 365
        short, _ = storage_cost(volumes, 90, 1.0)
        long, _ = storage_cost(volumes, 180, 1.0)
        assert short[:90] == long[:90]
        assert all(l > s for s, l in zip(short[90:], long[90:]))


def storage_aware_config(retention_days: int) -> SimulationConfig:
    return SimulationConfig(slos=[], record_size_mb=0.68,
                            net_cost_minor_per_mb=0.02,
                            storage_cost_minor_per_gb_day=1.0,
                            retention_days=retention_days, storage_aware=True)


class TestMonthly:
    def test_flat_rate_month_cloud_cost(self):
        result = simulate(NON_BLOCKING, flat_loads(1.0), SimulationConfig())
        january = result.monthly[0]
        assert january["cloud_minor"] == pytest.approx(7.03 * 744)   # 31 days
        april = result.monthly[3]
        assert april["cloud_minor"] == pytest.approx(7.03 * 720)     # 30 days

    def test_totals_row_is_column_sum(self):
        result = simulate(NON_BLOCKING, flat_loads(2.0), storage_aware_config(90))
        for key in ("cloud_minor", "net_minor", "storage_minor", "total_minor"):
            assert sum(row[key] for row in result.monthly) == pytest.approx(
                result.summary[{"cloud_minor": "cloud_cost_minor",
                                "net_minor": "net_cost_minor",
                                "storage_minor": "storage_cost_minor",
                                "total_minor": "total_cost_minor"}[key]], rel=1e-9)

    def test_storage_agnostic_mode_zeroes_net_and_storage(self):
        result = simulate(NON_BLOCKING, flat_loads(2.0), SimulationConfig())
        assert all(row["net_minor"] == 0.0 for row in result.monthly)
        assert all(row["storage_minor"] == 0.0 for row in result.monthly)
        assert result.summary["net_cost_minor"] == 0.0
        assert result.summary["storage_cost_minor"] == 0.0

    def test_retention_what_if_month_pattern(self):
        loads = project_year(TrafficModel(r_rps=1.4, hourly=[0.5, 1.5] * 84))
        short = simulate(NON_BLOCKING, loads, storage_aware_config(90))
        long = simulate(NON_BLOCKING, loads, storage_aware_config(180))
        for month in range(3):
            assert long.monthly[month]["storage_minor"] == pytest.approx(
                short.monthly[month]["storage_minor"])
        for month in range(3, 12):
            assert long.monthly[month]["storage_minor"] > \
                short.monthly[month]["storage_minor"]

    def test_rollup_recomputable_from_result(self):
        result = simulate(NON_BLOCKING, flat_loads(2.0), storage_aware_config(90))
        assert monthly_rollup(result) == result.monthly


class TestConfigValidation:
    def test_slo_fields(self):
        from windtunnel.catalog import ValidationError
        with pytest.raises(ValidationError):
            SLO.from_dict({"metric": "latency", "limit_s": -1, "max_violation_fraction": 0.1})
        with pytest.raises(ValidationError):
            SLO.from_dict({"metric": "latency", "limit_s": 10, "max_violation_fraction": 2})
        with pytest.raises(ValidationError):
            SLO.from_dict({"metric": "throughput", "limit_s": 10, "max_violation_fraction": 0})

    def test_config_round_trip(self):
        config = SimulationConfig.from_dict({
            "twin": {"kind": "twin", "name": "t"},
            "traffic": {"kind": "traffic", "name": "m"},
            "slos": [{"metric": "latency", "limit_s": 14400, "max_violation_fraction": 0.05}],
            "record_size_mb": 0.68, "net_cost_minor_per_mb": 0.02,
            "storage_cost_minor_per_gb_day": 1.0, "retention_days": 90,
            "storage_aware": True})
        assert SimulationConfig.from_dict(config.to_dict()) == config
