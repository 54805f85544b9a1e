"""Virtual-battery alternative to tokens.

Battery power is signed: positive while charging, negative while
discharging. Discharge limits are magnitudes. Each tenant's battery covers
demand above contract and recharges from its own headroom; a shared operator
battery soaks up whatever aggregate headroom is left.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SpocError
from .token_economy import ScenarioResult, TenantSimResult
from .trace import PowerTrace, TraceSet


class BatteryError(SpocError, ValueError):
    pass


@dataclass(frozen=True)
class BatteryConfig:
    e_max_kwh: float
    charge_limit_kw: float
    discharge_limit_kw: float
    initial_kwh: float = 0.0

    def __post_init__(self):
        for name in ("e_max_kwh", "charge_limit_kw", "discharge_limit_kw", "initial_kwh"):
            if getattr(self, name) < 0:
                raise BatteryError(f"{name} must be >= 0")
        if self.initial_kwh > self.e_max_kwh:
            raise BatteryError("initial_kwh exceeds e_max_kwh")

    def initial_state(self) -> "BatteryState":
        return BatteryState(self.initial_kwh)


@dataclass(frozen=True)
class BatteryState:
    energy_kwh: float = 0.0


def _check_state(cfg: BatteryConfig, state: BatteryState):
    if not 0 <= state.energy_kwh <= cfg.e_max_kwh:
        raise BatteryError(f"energy {state.energy_kwh} outside [0, {cfg.e_max_kwh}]")


def _evolve(cfg: BatteryConfig, energy: float, power_kw: float, slot_hours: float) -> float:
    return min(max(energy + power_kw * slot_hours, 0.0), cfg.e_max_kwh)


def tenant_battery_step(
    cfg: BatteryConfig,
    state: BatteryState,
    demand_kw: float,
    contract_kw: float,
    slot_hours: float,
) -> tuple[float, float, BatteryState]:
    """Returns (battery_power_kw, served_kw, new_state)."""
    if demand_kw < 0:
        raise BatteryError(f"negative demand {demand_kw}")
    _check_state(cfg, state)
    e = state.energy_kwh
    if demand_kw > contract_kw:
        over = demand_kw - contract_kw
        discharge = min(over, cfg.discharge_limit_kw, e / slot_hours)
        served = demand_kw if discharge == over else min(contract_kw + discharge, demand_kw)
        power = -discharge
    else:
        power = min(contract_kw - demand_kw, cfg.charge_limit_kw, (cfg.e_max_kwh - e) / slot_hours)
        served = demand_kw
    return power, served, BatteryState(_evolve(cfg, e, power, slot_hours))


def operator_battery_step(
    cfg: BatteryConfig,
    state: BatteryState,
    residual_headroom_kw: float,
    slot_hours: float,
) -> tuple[float, BatteryState]:
    _check_state(cfg, state)
    e = state.energy_kwh
    power = min(residual_headroom_kw, (cfg.e_max_kwh - e) / slot_hours)
    # rated power limits apply even though the headroom rule ignores them
    power = max(power, -min(cfg.discharge_limit_kw, e / slot_hours))
    power = min(power, cfg.charge_limit_kw)
    return power, BatteryState(_evolve(cfg, e, power, slot_hours))


def simulate_battery_scenario(
    ts: TraceSet,
    contracts: list[float],
    tenant_cfgs: list[BatteryConfig],
    op_cfg: BatteryConfig | None = None,
) -> ScenarioResult:
    if not len(ts) == len(contracts) == len(tenant_cfgs):
        raise BatteryError(
            f"length mismatch: {len(ts)} traces, {len(contracts)} contracts, {len(tenant_cfgs)} batteries"
        )
    if op_cfg is None:
        op_cfg = BatteryConfig(0.0, 0.0, 0.0)
    n_t, n = len(ts), ts.n_slots
    h = ts.slot_hours
    demand = ts.matrix()
    power = np.empty((n_t, n))
    served = np.empty((n_t, n))
    energy = np.empty((n_t, n))
    op_power = np.empty(n)
    op_energy = np.empty(n)

    states = [c.initial_state() for c in tenant_cfgs]
    op_state = op_cfg.initial_state()
    for t in range(n):
        residual = 0.0
        for i, cfg in enumerate(tenant_cfgs):
            d = float(demand[i, t])
            p, s, states[i] = tenant_battery_step(cfg, states[i], d, contracts[i], h)
            power[i, t], served[i, t], energy[i, t] = p, s, states[i].energy_kwh
            residual += contracts[i] - d - p
        op_power[t], op_state = operator_battery_step(op_cfg, op_state, residual, h)
        op_energy[t] = op_state.energy_kwh

    tenants = []
    for i, (tr, cfg) in enumerate(zip(ts, tenant_cfgs)):
        tenants.append(
            TenantSimResult(
                served=tr.with_samples(served[i]),
                spent=np.clip(-power[i], 0.0, None) * h,
                bought=np.clip(power[i], 0.0, None) * h,
                balance=energy[i],
                deficit=(demand[i] - served[i]) * h,
                initial_kwh=cfg.initial_kwh,
                final_state=states[i],
            )
        )
    return ScenarioResult(
        mechanism="battery",
        demand=ts,
        tenants=tenants,
        served_aggregate=PowerTrace("served_aggregate", h, served.sum(axis=0)),
        operator_battery_power=op_power,
        operator_battery_energy=op_energy,
        extra={"battery_power": power},
    )


def write_battery_log(result: ScenarioResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "entity_id", "power_kw", "energy_kwh"])
        power = result.extra["battery_power"]
        for i, res in enumerate(result.tenants):
            for t, (p, e) in enumerate(zip(power[i], res.balance)):
                w.writerow([t, res.tenant_id, repr(float(p)), repr(float(e))])
        for t, (p, e) in enumerate(zip(result.operator_battery_power, result.operator_battery_energy)):
            w.writerow([t, "operator", repr(float(p)), repr(float(e))])
    return path
