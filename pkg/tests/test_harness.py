import json
from dataclasses import replace

import numpy as np
import pytest

from spocsim.errors import ConfigError, StageError
from spocsim.harness import (
    ScenarioConfig,
    SweepSpec,
    SweepTable,
    emit_report,
    read_report,
    read_table,
    run_physical,
    run_provision,
    run_scenario,
    run_sweep,
)
from spocsim.trace import PowerTrace, TraceSet, save_traces


class TestScenario:
    def test_none_mechanism_is_neutral(self, small_cfg):
        rep = run_scenario(replace(small_cfg, mechanism="none"))
        assert rep["sums"]["spoc_revenue"] == 0
        assert rep["operator"]["profit_increase_pct"] == 0
        assert all(t["savings_pct"] == 0 for t in rep["tenants"])
        assert rep["provision"]["extra_provisioning_ratio"] == 0

    def test_deterministic_json(self, small_cfg, tmp_path):
        a = emit_report(run_scenario(small_cfg), "json", tmp_path / "a.json")
        b = emit_report(run_scenario(small_cfg), "json", tmp_path / "b.json")
        assert a.read_bytes() == b.read_bytes()

    def test_zero_reservation_tokens_match_none(self, small_cfg):
        tok = run_physical(replace(small_cfg, reservation_fraction=0.0))
        none = run_physical(replace(small_cfg, mechanism="none"))
        for a, b in zip(tok.scenario.tenants, none.scenario.tenants):
            assert np.array_equal(a.served.samples, b.served.samples)

    def test_tokens_sprint_and_stay_within_bounds(self, small_cfg):
        rep = run_scenario(small_cfg)
        prov = rep["provision"]
        assert all(a["spent_total_kwh"] > 0 for a in rep["tenant_activity"])
        assert prov["pdu_with_sprint_kw"] >= prov["pdu_baseline_kw"]
        assert prov["extra_provisioning_ratio"] <= rep["sums"]["reservation_kw_total"] / prov["pdu_baseline_kw"]
        assert prov["tenant_emergency_prob"] == pytest.approx([0.1] * 5, abs=1e-3)

    def test_battery_mechanism(self, small_cfg):
        rep = run_scenario(replace(small_cfg, mechanism="battery", operator_battery_kwh=20, operator_battery_kw=5))
        assert rep["mechanism"] == "battery"
        assert all(a["spent_total_kwh"] > 0 for a in rep["tenant_activity"])

    def test_trace_file_with_one_trace_per_tenant(self, tmp_path):
        ts = TraceSet([PowerTrace(f"r{i}", 1.0, [5 + i, 9, 7, 12 - i] * 30) for i in range(3)])
        path = save_traces(ts, tmp_path / "t.csv")
        rep = run_scenario(ScenarioConfig(trace_file=str(path), n_tenants=3, tenant_emergency_prob=0.25))
        assert [t["tenant_id"] for t in rep["tenants"]] == ["r0", "r1", "r2"]

    def test_stage_named_on_failure(self, tmp_path):
        with pytest.raises(StageError) as err:
            run_scenario(ScenarioConfig(trace_file=str(tmp_path / "missing.csv")))
        assert err.value.stage == "traces"

    def test_provision_only(self, small_cfg):
        rep = run_provision(small_cfg)
        assert set(rep) == {"config", "provision"}


class TestConfig:
    def test_round_trip(self, small_cfg, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(small_cfg.to_dict()))
        assert ScenarioConfig.from_file(p) == small_cfg

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"tenants": 5})

    @pytest.mark.parametrize("bad", [
        dict(mechanism="flywheel"), dict(n_tenants=0), dict(tenant_emergency_prob=1.0),
        dict(tenant_emergency_prob=[0.1, 0.1]), dict(synth={"wavelength": 3}),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            ScenarioConfig(**bad)


class TestSweep:
    def test_reservation_price_monotone(self, small_cfg):
        t = run_sweep(SweepSpec(small_cfg, "reservation_price", [0, 30, 60]))
        col = t.column("profit_increase_pct")
        assert col == sorted(col)

    def test_single_tenant_count_matches_scenario(self, small_cfg):
        t = run_sweep(SweepSpec(small_cfg, "tenant_count", [1]))
        rep = run_scenario(replace(small_cfg, n_tenants=1))
        assert len(t.rows) == 1
        assert t.column("profit_increase_pct")[0] == rep["summary"]["profit_increase_pct"]
        assert t.column("savings_pct_1")[0] == rep["tenants"][0]["savings_pct"]

    def test_repeated_point(self, small_cfg):
        t = run_sweep(SweepSpec(small_cfg, "usage_price", [0.2, 0.2]))
        assert t.rows[0][1:] == t.rows[1][1:]

    def test_order_independent(self, small_cfg):
        fwd = run_sweep(SweepSpec(small_cfg, "tenant_emergency_prob", [0.05, 0.1]))
        rev = run_sweep(SweepSpec(small_cfg, "tenant_emergency_prob", [0.1, 0.05]))
        assert fwd.rows == rev.rows[::-1]

    def test_tenant_count_pads_columns(self, small_cfg):
        t = run_sweep(SweepSpec(small_cfg, "tenant_count", [1, 3]))
        assert t.columns[-3:] == ["savings_pct_1", "savings_pct_2", "savings_pct_3"]
        assert t.rows[0][-2:] == [None, None]

    def test_operator_emergency_lowers_pdu(self, small_cfg):
        t = run_sweep(SweepSpec(small_cfg, "operator_emergency_prob", [0.0, 0.05]))
        base = t.column("pdu_baseline_kw")
        assert base[1] < base[0]

    def test_parallel_matches_serial(self, small_cfg):
        spec = SweepSpec(small_cfg, "tenant_count", [2, 3])
        assert run_sweep(spec, jobs=2).rows == run_sweep(spec).rows

    def test_invalid_axis(self, small_cfg):
        with pytest.raises(ConfigError):
            SweepSpec(small_cfg, "pue", [1.2])
        with pytest.raises(ConfigError):
            SweepSpec(small_cfg, "tenant_count", [2.5])


class TestEmit:
    def test_empty_table_is_header_only(self, tmp_path):
        t = SweepTable("usage_price", ["usage_price", "profit_increase_pct"], [])
        assert emit_report(t, "csv", tmp_path / "e.csv").read_text() == "usage_price,profit_increase_pct\n"

    def test_json_round_trip(self, small_cfg, tmp_path):
        rep = run_scenario(small_cfg)
        back = read_report(emit_report(rep, "json", tmp_path / "r.json"))
        assert back == json.loads(json.dumps(rep))

    def test_csv_round_trip(self, small_cfg, tmp_path):
        t = run_sweep(SweepSpec(small_cfg, "usage_price", [0.0, 0.1, 0.4]))
        back = read_table(emit_report(t, "csv", tmp_path / "s.csv"))
        assert back.columns == t.columns and back.rows == t.rows

    def test_report_csv_single_row(self, small_cfg, tmp_path):
        lines = emit_report(run_scenario(small_cfg), "csv", tmp_path / "r.csv").read_text().splitlines()
        assert len(lines) == 2
        assert "summary.profit_increase_pct" in lines[0].split(",")

    def test_bad_format(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_report({}, "xml", tmp_path / "x")
