import json

import pytest
from hypothesis import given, strategies as st

from spocsim.errors import EmptyTraceSet
from spocsim.provisioning import (
    contract_capacity,
    extra_provisioning_ratio,
    oversubscription_ratio,
    pdu_capacity,
    provision,
)
from spocsim.trace import PowerTrace, TraceSet, aggregate


def brute_force_capacity(samples, eps):
    """Scan every sample value in ascending order; return the first meeting the budget."""
    n = len(samples)
    for cand in sorted(set(samples)):
        exceed = sum(1 for s in samples if s > cand)
        if exceed / n <= eps:
            return cand
    raise AssertionError("unreachable: the maximum always qualifies")


STEP = [8.0] * 9 + [12.0]


class TestContractCapacity:
    def test_constant_zero_emergency(self):
        assert contract_capacity(PowerTrace("c", 1, [10.0] * 5), 0) == 10

    @pytest.mark.parametrize("eps", [0.1, 0.0])
    def test_step_trace_matches_oracle(self, eps):
        got = contract_capacity(PowerTrace("s", 1, STEP), eps)
        assert got == brute_force_capacity(STEP, eps)
        assert got == (8.0 if eps == 0.1 else 12.0)

    def test_rejects_bad_prob(self):
        with pytest.raises(ValueError):
            contract_capacity(PowerTrace("s", 1, STEP), 1.0)

    @given(st.lists(st.integers(0, 30).map(float), min_size=1, max_size=120),
           st.sampled_from([0, 0.01, 0.03, 0.05, 0.1, 0.15, 0.5, 0.99]))
    def test_matches_brute_force_with_ties(self, samples, eps):
        assert contract_capacity(PowerTrace("x", 1, samples), eps) == brute_force_capacity(samples, eps)

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=80), st.floats(0, 0.99), st.floats(0, 0.99))
    def test_monotone_in_emergency_prob(self, samples, a, b):
        tr = PowerTrace("x", 1, samples)
        lo, hi = sorted((a, b))
        assert contract_capacity(tr, hi) <= contract_capacity(tr, lo)

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=80), st.floats(0, 0.99))
    def test_result_is_a_sample_and_minimal(self, samples, eps):
        tr = PowerTrace("x", 1, samples)
        c = contract_capacity(tr, eps)
        assert c in samples
        smaller = [s for s in samples if s < c]
        assert all(sum(x > s for x in samples) / len(samples) > eps for s in smaller)


class TestPdu:
    def test_constant_aggregate(self):
        ts = TraceSet([PowerTrace("a", 1, [3.0] * 4), PowerTrace("b", 1, [4.0] * 4)])
        assert pdu_capacity(ts, emergency_prob=0) == 7

    def test_budgeted_aggregate(self):
        agg = [10.0] * 9 + [14.0]
        ts = TraceSet([PowerTrace("a", 1, agg)])
        assert pdu_capacity(ts, emergency_prob=0.1) == brute_force_capacity(agg, 0.1) == 10

    def test_served_equal_to_aggregate(self):
        ts = TraceSet([PowerTrace("a", 1, [1, 5, 2]), PowerTrace("b", 1, [3, 1, 4])])
        assert pdu_capacity(ts, aggregate(ts), 0) == pdu_capacity(ts, None, 0)

    def test_empty(self):
        with pytest.raises(EmptyTraceSet):
            pdu_capacity(TraceSet([]))


class TestRatios:
    @pytest.mark.parametrize("base,spr,expected", [(100, 103, 0.03), (100, 100, 0.0), (50, 60, 0.2)])
    def test_extra_ratio(self, base, spr, expected):
        assert extra_provisioning_ratio(base, spr) == pytest.approx(expected, abs=1e-15)

    def test_zero_baseline(self):
        with pytest.raises(ValueError):
            extra_provisioning_ratio(0, 5)

    def test_oversubscription(self):
        assert oversubscription_ratio(PowerTrace("x", 1, [10, 12]), 10) == pytest.approx(0.2)


def test_provision_report_bounds_and_json():
    demand = TraceSet([PowerTrace("a", 1, [5, 9, 12, 6]), PowerTrace("b", 1, [7, 11, 4, 8])])
    contracts = [9.0, 8.0]
    capped = TraceSet([PowerTrace(t.id, 1, [min(x, c) for x in t.samples]) for t, c in zip(demand, contracts)])
    reservations = [1.0, 2.0]
    sprint = TraceSet([
        PowerTrace(t.id, 1, [min(x, c + r) for x in t.samples])
        for t, c, r in zip(demand, contracts, reservations)
    ])
    rep = provision(demand, contracts, aggregate(capped), aggregate(sprint))
    assert rep.pdu_baseline_kw == 17  # 9 + 8 in slot 1
    assert rep.pdu_with_sprint_kw == 19  # 9 + min(11, 10) in slot 1
    assert rep.pdu_with_sprint_kw >= rep.pdu_baseline_kw
    assert rep.pdu_with_sprint_kw <= rep.pdu_baseline_kw + sum(reservations)
    assert rep.extra_provisioning_ratio == pytest.approx(19 / 17 - 1)
    assert rep.tenant_emergency_prob == [0.25, 0.25]
    assert json.loads(json.dumps(rep.to_dict())) == rep.to_dict()
