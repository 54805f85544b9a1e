"""Capacity sizing under an emergency-probability budget.

A capacity C has an emergency whenever demand strictly exceeds it, so the
smallest C meeting a budget is always one of the trace's own sample values.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyTraceSet
from .trace import PowerTrace, TraceSet, aggregate, exceedance_prob


def _check_prob(emergency_prob: float):
    if not 0 <= emergency_prob < 1:
        raise ValueError(f"emergency_prob must lie in [0, 1), got {emergency_prob}")


def contract_capacity(trace: PowerTrace, emergency_prob: float) -> float:
    """Minimum capacity whose exceedance probability is at most ``emergency_prob``."""
    _check_prob(emergency_prob)
    s = np.sort(trace.samples)
    n = s.size
    # exceed[j]: number of samples strictly above s[j]
    exceed = n - np.searchsorted(s, s, side="right")
    feasible = exceed / n <= emergency_prob
    return float(s[int(np.argmax(feasible))])


def pdu_capacity(
    ts: TraceSet,
    served: PowerTrace | None = None,
    emergency_prob: float = 0.0,
) -> float:
    """Size the shared PDU on the aggregate demand, or on ``served`` when given."""
    if len(ts) == 0:
        raise EmptyTraceSet("cannot size a PDU for an empty trace set")
    target = aggregate(ts) if served is None else served
    return contract_capacity(target, emergency_prob)


def extra_provisioning_ratio(pdu_baseline_kw: float, pdu_with_sprint_kw: float) -> float:
    if pdu_baseline_kw <= 0:
        raise ValueError("pdu_baseline_kw must be > 0")
    return pdu_with_sprint_kw / pdu_baseline_kw - 1.0


def oversubscription_ratio(trace: PowerTrace, capacity_kw: float) -> float:
    """How far the trace's peak sits above ``capacity_kw``, as a fraction of it.

    A tenant that "oversubscribes its contract by 20%" has a peak demand of
    1.2 times its contract capacity.
    """
    if capacity_kw <= 0:
        raise ValueError("capacity_kw must be > 0")
    return trace.peak_kw / capacity_kw - 1.0


@dataclass
class ProvisionReport:
    contract_kw: list[float]
    pdu_baseline_kw: float
    pdu_with_sprint_kw: float
    extra_provisioning_ratio: float
    tenant_emergency_prob: list[float]
    pdu_emergency_prob: float
    pdu_emergency_prob_baseline: float
    pdu_emergency_prob_with_sprint: float
    tenant_oversubscription: list[float]

    def to_dict(self) -> dict:
        return asdict(self)


def size_contracts(ts: TraceSet, emergency_probs) -> list[float]:
    """Per-tenant contract capacities; ``emergency_probs`` is a scalar or one per tenant."""
    if np.isscalar(emergency_probs):
        emergency_probs = [emergency_probs] * len(ts)
    if len(emergency_probs) != len(ts):
        raise ValueError(f"{len(emergency_probs)} emergency probabilities for {len(ts)} tenants")
    return [contract_capacity(t, p) for t, p in zip(ts, emergency_probs)]


def provision(
    ts: TraceSet,
    contracts: list[float],
    baseline_served: PowerTrace,
    sprint_served: PowerTrace,
    pdu_emergency_prob: float = 0.0,
) -> ProvisionReport:
    """Build the sizing report from demand, the capped baseline and the sprint-served aggregate.

    The baseline arm is sized on ``baseline_served`` (tenants capped at their
    contracts); the sprint arm on ``sprint_served``.
    """
    base = pdu_capacity(ts, baseline_served, pdu_emergency_prob)
    spr = pdu_capacity(ts, sprint_served, pdu_emergency_prob)
    return ProvisionReport(
        contract_kw=list(contracts),
        pdu_baseline_kw=base,
        pdu_with_sprint_kw=spr,
        extra_provisioning_ratio=extra_provisioning_ratio(base, spr),
        tenant_emergency_prob=[exceedance_prob(t, c) for t, c in zip(ts, contracts)],
        pdu_emergency_prob=pdu_emergency_prob,
        pdu_emergency_prob_baseline=exceedance_prob(baseline_served, base),
        pdu_emergency_prob_with_sprint=exceedance_prob(sprint_served, spr),
        tenant_oversubscription=[oversubscription_ratio(t, c) for t, c in zip(ts, contracts)],
    )
