import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spocsim.battery import (
    BatteryConfig,
    BatteryError,
    BatteryState,
    operator_battery_step,
    simulate_battery_scenario,
    tenant_battery_step,
    write_battery_log,
)
from spocsim.token_economy import TenantConfig, simulate_scenario
from spocsim.trace import PowerTrace, TraceSet

CFG = BatteryConfig(e_max_kwh=10, charge_limit_kw=3, discharge_limit_kw=4)


class TestTenantStep:
    def test_discharge_covers_overage(self):
        p, served, st_ = tenant_battery_step(CFG, BatteryState(5), 12, 10, 1.0)
        assert (p, served, st_.energy_kwh) == (-2, 12, 3)

    def test_empty_battery_caps(self):
        p, served, st_ = tenant_battery_step(CFG, BatteryState(0), 12, 10, 1.0)
        assert (p, served, st_.energy_kwh) == (0, 10, 0)

    def test_charge_limited_by_room(self):
        p, served, st_ = tenant_battery_step(CFG, BatteryState(9), 6, 10, 1.0)
        assert (p, served, st_.energy_kwh) == (1, 6, 10)

    def test_discharge_limited_by_rate(self):
        p, served, _ = tenant_battery_step(CFG, BatteryState(10), 16, 10, 1.0)
        assert (p, served) == (-4, 14)

    def test_errors(self):
        with pytest.raises(BatteryError):
            tenant_battery_step(CFG, BatteryState(5), -1, 10, 1.0)
        with pytest.raises(BatteryError):
            tenant_battery_step(CFG, BatteryState(11), 5, 10, 1.0)
        with pytest.raises(BatteryError):
            BatteryConfig(-1, 0, 0)


class TestOperatorStep:
    def test_charge_limited(self):
        p, st_ = operator_battery_step(CFG, BatteryState(0), 5, 1.0)
        assert (p, st_.energy_kwh) == (3, 3)

    def test_full(self):
        p, st_ = operator_battery_step(CFG, BatteryState(10), 5, 1.0)
        assert (p, st_.energy_kwh) == (0, 10)

    def test_discharge_energy_limited(self):
        p, st_ = operator_battery_step(CFG, BatteryState(1), -2, 1.0)
        assert (p, st_.energy_kwh) == (-1, 0)


class TestScenario:
    def test_three_slot_oracle(self):
        cfg = BatteryConfig(10, 3, 4, initial_kwh=2)
        sc = simulate_battery_scenario(TraceSet([PowerTrace("a", 1.0, [12, 6, 12])]), [10], [cfg])
        assert sc.tenants[0].served.samples.tolist() == [12, 6, 12]
        assert sc.tenants[0].balance.tolist() == [0, 3, 1]
        assert sc.extra["battery_power"][0].tolist() == [-2, 3, -2]

    def test_zero_capacity_is_plain_capping(self):
        ts = TraceSet([PowerTrace("a", 1, [5, 12, 8, 15]), PowerTrace("b", 1, [9, 3, 14, 2])])
        zero = BatteryConfig(0, 5, 5)
        sc = simulate_battery_scenario(ts, [10, 8], [zero, zero])
        assert sc.served_aggregate.samples.tolist() == [13, 13, 16, 12]

    def test_full_batteries_without_violations_stay_idle(self):
        ts = TraceSet([PowerTrace("a", 1, [5, 7, 10])])
        cfg = BatteryConfig(6, 2, 2, initial_kwh=6)
        sc = simulate_battery_scenario(ts, [10], [cfg])
        assert sc.tenants[0].balance.tolist() == [6, 6, 6]
        assert sc.tenants[0].served.samples.tolist() == [5, 7, 10]

    def test_operator_battery_tracks_headroom(self):
        ts = TraceSet([PowerTrace("a", 1, [6, 6]), PowerTrace("b", 1, [8, 8])])
        zero = BatteryConfig(0, 0, 0)
        op = BatteryConfig(5, 3, 3)
        sc = simulate_battery_scenario(ts, [10, 10], [zero, zero], op)
        # headroom 6 kW each slot: charge-limited to 3, then room-limited to 2
        assert sc.operator_battery_power.tolist() == [3, 2]
        assert sc.operator_battery_energy.tolist() == [3, 5]

    def test_length_mismatch(self):
        with pytest.raises(BatteryError):
            simulate_battery_scenario(TraceSet([PowerTrace("a", 1, [1])]), [1, 2], [CFG])

    def test_log(self, tmp_path):
        cfg = BatteryConfig(10, 3, 4, initial_kwh=2)
        sc = simulate_battery_scenario(TraceSet([PowerTrace("a", 1.0, [12, 6, 12])]), [10], [cfg])
        lines = write_battery_log(sc, tmp_path / "b.csv").read_text().splitlines()
        assert lines[0] == "slot,entity_id,power_kw,energy_kwh"
        assert lines[1] == "0,a,-2.0,0.0"
        assert len(lines) == 1 + 3 + 3


bat_cfgs = st.builds(
    lambda e, c, d, f: BatteryConfig(e, c, d, initial_kwh=e * f),
    st.floats(0, 100), st.floats(0, 30), st.floats(0, 30), st.floats(0, 1),
)


@settings(max_examples=200)
@given(bat_cfgs, st.lists(st.floats(0, 60), min_size=1, max_size=60), st.floats(0.5, 40),
       st.sampled_from([1 / 60, 0.25, 1.0]))
def test_battery_invariants(cfg, demand, contract, h):
    sc = simulate_battery_scenario(TraceSet([PowerTrace("a", h, demand)]), [contract], [cfg])
    res = sc.tenants[0]
    power = sc.extra["battery_power"][0]
    energy = np.concatenate([[cfg.initial_kwh], res.balance])
    d = np.asarray(demand)
    assert np.all(energy >= 0) and np.all(energy <= cfg.e_max_kwh)
    assert np.all(power <= cfg.charge_limit_kw) and np.all(-power <= cfg.discharge_limit_kw)
    assert np.all(-power * h <= energy[:-1] * (1 + 1e-12))
    assert np.allclose(np.diff(energy), power * h, rtol=0, atol=1e-9 * max(cfg.e_max_kwh, 1))
    assert np.all(res.served.samples >= np.minimum(d, contract))
    assert np.all(res.served.samples <= d)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 60), min_size=1, max_size=40), st.floats(0.5, 40), st.floats(0, 20))
def test_zero_battery_matches_zero_reservation_tokens(demand, contract, rate):
    ts = TraceSet([PowerTrace("a", 0.25, demand)])
    bat = simulate_battery_scenario(ts, [contract], [BatteryConfig(0, rate, rate)])
    tok = simulate_scenario(ts, [TenantConfig(contract, 0)])
    assert np.array_equal(bat.served_aggregate.samples, tok.served_aggregate.samples)
