"""Token-based management of opportunistic capacity.

One token is one kWh of above-contract energy. A tenant

* buys tokens only in slots where demand is strictly below contract, at a
  rate of at most ``purchase_rate_factor`` times its headroom, up to a
  balance cap;
* spends tokens in slots where demand exceeds contract, at a rate of at most
  its reservation capacity and never more than its balance.

Any demand neither covered by contract capacity nor by tokens is capped and
recorded as a deficit. Prices are not handled here; see ``economics``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpocError
from .trace import PowerTrace, TraceSet

GREEDY = "greedy"
NO_PURCHASE = "none"
DEFAULT_TOKEN_CAP_HOURS = 24.0


class TokenError(SpocError, ValueError):
    pass


@dataclass(frozen=True)
class TenantConfig:
    contract_kw: float
    reservation_kw: float = 0.0
    token_cap_kwh: float | None = None
    purchase_rate_factor: float = 1.0
    purchase_policy: str = GREEDY
    initial_tokens_kwh: float = 0.0

    def __post_init__(self):
        if self.token_cap_kwh is None:
            object.__setattr__(self, "token_cap_kwh", self.reservation_kw * DEFAULT_TOKEN_CAP_HOURS)
        if not self.contract_kw > 0:
            raise TokenError(f"contract_kw must be > 0, got {self.contract_kw}")
        if self.reservation_kw < 0:
            raise TokenError("reservation_kw must be >= 0")
        if not self.token_cap_kwh >= self.initial_tokens_kwh >= 0:
            raise TokenError("need token_cap_kwh >= initial_tokens_kwh >= 0")
        if self.purchase_rate_factor < 0:
            raise TokenError("purchase_rate_factor must be >= 0")
        if self.purchase_policy not in (GREEDY, NO_PURCHASE):
            raise TokenError(f"unknown purchase_policy {self.purchase_policy!r}")

    def initial_state(self) -> "TokenState":
        return TokenState(self.initial_tokens_kwh)


@dataclass(frozen=True)
class TokenState:
    balance_kwh: float = 0.0


@dataclass(frozen=True)
class StepOutcome:
    served_kw: float
    tokens_spent_kwh: float
    tokens_bought_kwh: float
    capping_deficit_kwh: float
    sprinted: bool


def token_step(
    cfg: TenantConfig, state: TokenState, demand_kw: float, slot_hours: float
) -> tuple[StepOutcome, TokenState]:
    if demand_kw < 0:
        raise TokenError(f"negative demand {demand_kw}")
    if not slot_hours > 0:
        raise TokenError("slot_hours must be > 0")
    balance = state.balance_kwh
    if not 0 <= balance <= cfg.token_cap_kwh:
        raise TokenError(f"balance {balance} outside [0, {cfg.token_cap_kwh}]")

    contract = cfg.contract_kw
    if demand_kw > contract:
        over = demand_kw - contract
        sprint_kw = min(over, cfg.reservation_kw, balance / slot_hours)
        if sprint_kw == over:
            served = demand_kw
        else:
            served = min(contract + sprint_kw, demand_kw)
        spent = min(sprint_kw * slot_hours, balance)
        new_balance = balance - spent
        deficit = (demand_kw - served) * slot_hours
        outcome = StepOutcome(served, spent, 0.0, deficit, sprint_kw > 0)
        return outcome, TokenState(new_balance)

    bought = 0.0
    if cfg.purchase_policy == GREEDY:
        bought = min(
            cfg.purchase_rate_factor * (contract - demand_kw) * slot_hours,
            cfg.token_cap_kwh - balance,
        )
    new_balance = min(balance + bought, cfg.token_cap_kwh)
    return StepOutcome(demand_kw, 0.0, bought, 0.0, False), TokenState(new_balance)


@dataclass(eq=False)
class TenantSimResult:
    """Per-slot flows for one tenant.

    Shared by both mechanisms: for a virtual battery ``spent`` is discharged
    energy, ``bought`` is charged energy and ``balance`` is stored energy.
    """

    served: PowerTrace
    spent: np.ndarray
    bought: np.ndarray
    balance: np.ndarray
    deficit: np.ndarray
    initial_kwh: float
    final_state: object

    @property
    def tenant_id(self) -> str:
        return self.served.id

    @property
    def spent_total_kwh(self) -> float:
        return math.fsum(self.spent)

    @property
    def bought_total_kwh(self) -> float:
        return math.fsum(self.bought)

    @property
    def deficit_total_kwh(self) -> float:
        return math.fsum(self.deficit)

    @property
    def capped_slots(self) -> int:
        return int(np.count_nonzero(self.deficit > 0))

    @property
    def sprint_slots(self) -> int:
        return int(np.count_nonzero(self.spent > 0))

    def summary(self) -> dict:
        return {
            "tenant_id": self.tenant_id,
            "served_energy_kwh": self.served.energy_kwh,
            "served_peak_kw": self.served.peak_kw,
            "spent_total_kwh": self.spent_total_kwh,
            "bought_total_kwh": self.bought_total_kwh,
            "deficit_total_kwh": self.deficit_total_kwh,
            "capped_slots": self.capped_slots,
            "sprint_slots": self.sprint_slots,
            "final_balance_kwh": float(self.balance[-1]),
        }


@dataclass(eq=False)
class ScenarioResult:
    mechanism: str
    demand: TraceSet
    tenants: list[TenantSimResult]
    served_aggregate: PowerTrace
    operator_battery_power: np.ndarray | None = None
    operator_battery_energy: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def served(self) -> TraceSet:
        return TraceSet([t.served for t in self.tenants])

    @property
    def metered_energy_kwh(self) -> float:
        """IT energy through the meters: served load plus any battery charging."""
        energy = math.fsum(t.served.energy_kwh for t in self.tenants)
        if self.mechanism == "battery":
            energy += math.fsum(t.bought_total_kwh for t in self.tenants)
        return energy


def simulate_tenant(trace: PowerTrace, cfg: TenantConfig) -> TenantSimResult:
    n = len(trace)
    h = trace.slot_hours
    served = np.empty(n)
    spent = np.empty(n)
    bought = np.empty(n)
    balance = np.empty(n)
    deficit = np.empty(n)
    state = cfg.initial_state()
    for i, demand in enumerate(trace.samples.tolist()):
        out, state = token_step(cfg, state, demand, h)
        served[i] = out.served_kw
        spent[i] = out.tokens_spent_kwh
        bought[i] = out.tokens_bought_kwh
        balance[i] = state.balance_kwh
        deficit[i] = out.capping_deficit_kwh
    return TenantSimResult(
        served=trace.with_samples(served),
        spent=spent,
        bought=bought,
        balance=balance,
        deficit=deficit,
        initial_kwh=cfg.initial_tokens_kwh,
        final_state=state,
    )


def simulate_scenario(ts: TraceSet, cfgs: list[TenantConfig], mechanism: str = "tokens") -> ScenarioResult:
    if len(cfgs) != len(ts):
        raise TokenError(f"{len(cfgs)} tenant configs for {len(ts)} traces")
    results = [simulate_tenant(tr, cfg) for tr, cfg in zip(ts, cfgs)]
    agg = np.sum([r.served.samples for r in results], axis=0)
    return ScenarioResult(
        mechanism=mechanism,
        demand=ts,
        tenants=results,
        served_aggregate=PowerTrace("served_aggregate", ts.slot_hours, agg),
    )


EVENT_LOG_COLUMNS = [
    "slot", "tenant_id", "demand_kw", "served_kw",
    "spent_kwh", "bought_kwh", "balance_kwh", "deficit_kwh",
]


def write_event_log(result: ScenarioResult, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENT_LOG_COLUMNS)
        for tr, res in zip(result.demand, result.tenants):
            cols = zip(tr.samples, res.served.samples, res.spent, res.bought, res.balance, res.deficit)
            for i, row in enumerate(cols):
                w.writerow([i, res.tenant_id, *(repr(float(v)) for v in row)])
    return path
