"""Prices, operator and tenant ledgers, and the two headline metrics.

Monthly rates are prorated linearly over the simulated duration. The
operator's baseline arm is plain capping: no reservations, no token sales,
PDU sized on the capped aggregate. Tenants' baseline is leasing, at the full
contract price, enough capacity to serve the same power without capping.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigError
from .provisioning import ProvisionReport
from .token_economy import ScenarioResult, TenantConfig, TenantSimResult

MONTHS_PER_YEAR = 12
W_PER_KW = 1000


def amortize_capex(capex_usd_per_w: float, amortization_years: float) -> float:
    """Capital cost per watt spread evenly over the facility life, in $/kW/month."""
    if not amortization_years > 0:
        raise ValueError("amortization_years must be > 0")
    return capex_usd_per_w * W_PER_KW / (amortization_years * MONTHS_PER_YEAR)


def derive_usage_price(contract_price_usd_per_kw_month: float, hours_per_month: float = 720.0) -> float:
    """Energy-equivalent price of a fully utilised contract kW, in $/kWh."""
    if not hours_per_month > 0:
        raise ValueError("hours_per_month must be > 0")
    return contract_price_usd_per_kw_month / hours_per_month


@dataclass(frozen=True)
class PricingConfig:
    contract_price_usd_per_kw_month: float = 150.0
    reservation_price_usd_per_kw_month: float = 30.0
    usage_price_usd_per_kwh: float = 0.20
    electricity_usd_per_kwh: float = 0.10
    pue: float = 1.5
    capex_usd_per_w: float = 15.0
    amortization_years: float = 15.0
    hours_per_month: float = 720.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"pricing field {f.name} must be >= 0")
        if self.pue < 1:
            raise ConfigError("pue must be >= 1")
        if not self.amortization_years > 0 or not self.hours_per_month > 0:
            raise ConfigError("amortization_years and hours_per_month must be > 0")

    @property
    def infra_usd_per_kw_month(self) -> float:
        return amortize_capex(self.capex_usd_per_w, self.amortization_years)

    def to_dict(self) -> dict:
        return asdict(self)


def energy_cost(it_energy_kwh: float, pricing: PricingConfig) -> float:
    if it_energy_kwh < 0:
        raise ValueError("it_energy_kwh must be >= 0")
    return it_energy_kwh * pricing.pue * pricing.electricity_usd_per_kwh


def months_of(scenario: ScenarioResult, pricing: PricingConfig) -> float:
    hours = scenario.demand.n_slots * scenario.demand.slot_hours
    if hours <= 0:
        raise ValueError("zero-length scenario")
    return hours / pricing.hours_per_month


def _pct_change(new: float, base: float) -> float | None:
    if base == 0:
        return 0.0 if new == 0 else None
    return 100.0 * (new - base) / abs(base)


@dataclass
class OperatorLedger:
    months: float
    revenue_contract: float
    revenue_reservation: float
    revenue_tokens: float
    cost_infra: float
    cost_energy: float
    profit: float
    baseline_revenue_contract: float
    baseline_cost_infra: float
    baseline_cost_energy: float
    baseline_profit: float
    profit_increase_pct: float | None
    baseline_profit_nonpositive: bool

    @property
    def revenue_total(self) -> float:
        return self.revenue_contract + self.revenue_reservation + self.revenue_tokens

    @property
    def spoc_revenue(self) -> float:
        return self.revenue_reservation + self.revenue_tokens

    def to_dict(self) -> dict:
        return asdict(self)


def operator_ledger(
    scenario: ScenarioResult,
    provision: ProvisionReport,
    cfgs: list[TenantConfig],
    pricing: PricingConfig,
    months: float | None = None,
) -> OperatorLedger:
    if months is None:
        months = months_of(scenario, pricing)
    if not months > 0:
        raise ValueError("months must be > 0")
    infra_rate = pricing.infra_usd_per_kw_month

    rev_contract = math.fsum(c.contract_kw for c in cfgs) * pricing.contract_price_usd_per_kw_month * months
    rev_res = math.fsum(c.reservation_kw for c in cfgs) * pricing.reservation_price_usd_per_kw_month * months
    rev_tokens = math.fsum(r.bought_total_kwh * pricing.usage_price_usd_per_kwh for r in scenario.tenants)
    cost_infra = provision.pdu_with_sprint_kw * infra_rate * months
    cost_energy = energy_cost(scenario.metered_energy_kwh, pricing)
    profit = math.fsum([rev_contract, rev_res, rev_tokens, -cost_infra, -cost_energy])

    h = scenario.demand.slot_hours
    capped_kwh = math.fsum(
        h * math.fsum(np.minimum(tr.samples, c.contract_kw)) for tr, c in zip(scenario.demand, cfgs)
    )
    base_infra = provision.pdu_baseline_kw * infra_rate * months
    base_energy = energy_cost(capped_kwh, pricing)
    base_profit = math.fsum([rev_contract, -base_infra, -base_energy])

    return OperatorLedger(
        months=months,
        revenue_contract=rev_contract,
        revenue_reservation=rev_res,
        revenue_tokens=rev_tokens,
        cost_infra=cost_infra,
        cost_energy=cost_energy,
        profit=profit,
        baseline_revenue_contract=rev_contract,
        baseline_cost_infra=base_infra,
        baseline_cost_energy=base_energy,
        baseline_profit=base_profit,
        profit_increase_pct=_pct_change(profit, base_profit),
        baseline_profit_nonpositive=base_profit <= 0,
    )


@dataclass
class TenantLedger:
    tenant_id: str
    contract_charge: float
    reservation_charge: float
    usage_charge: float
    spoc_cost: float
    baseline_kw: float
    baseline_cost: float
    savings_pct: float | None

    @property
    def spoc_payment(self) -> float:
        """Payments specific to opportunistic capacity."""
        return self.reservation_charge + self.usage_charge

    def to_dict(self) -> dict:
        return asdict(self)


def tenant_ledger(
    result: TenantSimResult,
    cfg: TenantConfig,
    pricing: PricingConfig,
    months: float,
) -> TenantLedger:
    if not months > 0:
        raise ValueError("months must be > 0")
    contract = cfg.contract_kw * pricing.contract_price_usd_per_kw_month * months
    reservation = cfg.reservation_kw * pricing.reservation_price_usd_per_kw_month * months
    usage = result.bought_total_kwh * pricing.usage_price_usd_per_kwh
    spoc = contract + reservation + usage
    peak = result.served.peak_kw
    baseline = peak * pricing.contract_price_usd_per_kw_month * months
    savings = 100.0 * (baseline - spoc) / baseline if baseline > 0 else None
    return TenantLedger(
        tenant_id=result.tenant_id,
        contract_charge=contract,
        reservation_charge=reservation,
        usage_charge=usage,
        spoc_cost=spoc,
        baseline_kw=peak,
        baseline_cost=baseline,
        savings_pct=savings,
    )


@dataclass
class BenefitSummary:
    profit_increase_pct: float | None
    mean_savings_pct: float | None
    min_savings_pct: float | None
    mutual_benefit: bool

    def to_dict(self) -> dict:
        return asdict(self)


def benefit_summary(op: OperatorLedger, tenants: list[TenantLedger]) -> BenefitSummary:
    savings = [t.savings_pct for t in tenants]
    if not savings or any(s is None for s in savings):
        return BenefitSummary(op.profit_increase_pct, None, None, False)
    profit = op.profit_increase_pct
    return BenefitSummary(
        profit_increase_pct=profit,
        mean_savings_pct=math.fsum(savings) / len(savings),
        min_savings_pct=min(savings),
        mutual_benefit=profit is not None and profit > 0 and min(savings) > 0,
    )
