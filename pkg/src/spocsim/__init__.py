"""Trace-driven simulator of opportunistic power-capacity sprinting in multi-tenant datacenters."""

from .battery import (
    BatteryConfig,
    BatteryState,
    operator_battery_step,
    simulate_battery_scenario,
    tenant_battery_step,
)
from .economics import (
    PricingConfig,
    amortize_capex,
    benefit_summary,
    derive_usage_price,
    energy_cost,
    operator_ledger,
    tenant_ledger,
)
from .harness import ScenarioConfig, SweepSpec, emit_report, run_scenario, run_sweep
from .provisioning import contract_capacity, extra_provisioning_ratio, pdu_capacity
from .token_economy import (
    TenantConfig,
    TokenState,
    simulate_scenario,
    simulate_tenant,
    token_step,
)
from .trace import (
    PowerTrace,
    SynthSpec,
    TraceSet,
    aggregate,
    exceedance_prob,
    load_traces,
    scale_and_split,
    synthesize_trace,
)

__version__ = "0.1.0"
