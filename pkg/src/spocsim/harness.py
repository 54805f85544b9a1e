"""End-to-end scenario pipeline, parameter sweeps and report files.

A scenario runs in two halves. The physical half builds traces, sizes
contracts and simulates the chosen mechanism. The economic half sizes the PDU
and prices everything. Pricing-axis sweeps reuse one physical run, which is
only valid while purchases ignore prices (the greedy policy does).
"""
from __future__ import annotations

import csv
import functools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .battery import BatteryConfig, simulate_battery_scenario
from .economics import (
    PricingConfig,
    benefit_summary,
    months_of,
    operator_ledger,
    tenant_ledger,
)
from .errors import ConfigError, SpocError, StageError
from .provisioning import provision, size_contracts
from .token_economy import (
    DEFAULT_TOKEN_CAP_HOURS,
    GREEDY,
    ScenarioResult,
    TenantConfig,
    simulate_scenario,
)
from .trace import PowerTrace, SynthSpec, TraceSet, load_traces, scale_and_split, synthesize_trace

MECHANISMS = ("tokens", "battery", "none")
PRICE_AXES = ("reservation_price", "usage_price")
AXES = PRICE_AXES + ("tenant_count", "operator_emergency_prob", "tenant_emergency_prob")

# Extra PDU capacity reported for 20% contract oversubscription at 10%
# emergency on production rack traces; kept for side-by-side reporting only.
REFERENCE_EXTRA_PROVISIONING_RATIO = 0.03

DEFAULT_SYNTH = {
    "mean_kw": 10.0,
    "diurnal_amplitude_kw": 6.0,
    "burst_prob": 0.01,
    "burst_scale": 1.1,
    "noise_frac": 0.04,
    "n_slots": 43_200,
    "slot_hours": 1 / 60,
}


@dataclass(frozen=True)
class ScenarioConfig:
    trace_file: str | None = None
    trace_format: str = "wide"
    synth: dict = field(default_factory=lambda: dict(DEFAULT_SYNTH))
    n_tenants: int = 5
    per_tenant_mean_kw: float | None = None
    tenant_emergency_prob: float | list = 0.10
    reservation_fraction: float = 0.20
    mechanism: str = "tokens"
    purchase_rate_factor: float = 1.0
    token_cap_hours: float = DEFAULT_TOKEN_CAP_HOURS
    operator_battery_kwh: float = 0.0
    operator_battery_kw: float = 0.0
    pricing: PricingConfig = field(default_factory=PricingConfig)
    operator_emergency_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.pricing, dict):
            object.__setattr__(self, "pricing", PricingConfig(**self.pricing))
        if isinstance(self.tenant_emergency_prob, tuple):
            object.__setattr__(self, "tenant_emergency_prob", list(self.tenant_emergency_prob))
        if self.mechanism not in MECHANISMS:
            raise ConfigError(f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}")
        if self.trace_format not in ("wide", "long"):
            raise ConfigError(f"trace_format must be 'wide' or 'long', got {self.trace_format!r}")
        if int(self.n_tenants) != self.n_tenants or self.n_tenants < 1:
            raise ConfigError("n_tenants must be a positive integer")
        if self.reservation_fraction < 0:
            raise ConfigError("reservation_fraction must be >= 0")
        if self.purchase_rate_factor < 0 or self.token_cap_hours < 0:
            raise ConfigError("purchase_rate_factor and token_cap_hours must be >= 0")
        probs = self.tenant_emergency_prob
        for p in probs if isinstance(probs, list) else [probs]:
            if not 0 <= p < 1:
                raise ConfigError(f"tenant emergency probability {p} outside [0, 1)")
        if isinstance(probs, list) and len(probs) != self.n_tenants:
            raise ConfigError(f"{len(probs)} tenant emergency probabilities for {self.n_tenants} tenants")
        if not 0 <= self.operator_emergency_prob < 1:
            raise ConfigError("operator_emergency_prob outside [0, 1)")
        unknown = set(self.synth) - {f.name for f in fields(SynthSpec)}
        if unknown:
            raise ConfigError(f"unknown synth fields: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        if "synth" in data:
            data["synth"] = {**DEFAULT_SYNTH, **data["synth"]}
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pricing"] = self.pricing.to_dict()
        return d


# --------------------------------------------------------------------------
# Pipeline
# --------------------------------------------------------------------------

@dataclass(eq=False)
class PhysicalRun:
    traces: TraceSet
    contracts: list[float]
    tenant_cfgs: list[TenantConfig]
    scenario: ScenarioResult
    capped: ScenarioResult


def _stage(name):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except (SpocError, ValueError, OSError) as exc:
                raise StageError(name, exc) from exc
        return inner
    return wrap


@_stage("traces")
def build_traces(cfg: ScenarioConfig) -> TraceSet:
    if cfg.trace_file:
        ts = load_traces(cfg.trace_file, cfg.trace_format)
        if len(ts) == cfg.n_tenants and cfg.per_tenant_mean_kw is None:
            return ts
        if len(ts) != 1:
            raise ConfigError(
                f"trace file holds {len(ts)} traces; need exactly {cfg.n_tenants} or a single source trace"
            )
        source = ts[0]
    else:
        source = synthesize_trace(SynthSpec(**{**cfg.synth, "seed": cfg.seed}), id="source")
    target = cfg.per_tenant_mean_kw or source.mean_kw
    return scale_and_split(source, cfg.n_tenants, target, seed=cfg.seed + 1)


@_stage("contracts")
def build_contracts(cfg: ScenarioConfig, ts: TraceSet) -> list[float]:
    return size_contracts(ts, cfg.tenant_emergency_prob)


def tenant_configs(cfg: ScenarioConfig, contracts: list[float]) -> list[TenantConfig]:
    frac = 0.0 if cfg.mechanism == "none" else cfg.reservation_fraction
    out = []
    for c in contracts:
        r = frac * c
        out.append(
            TenantConfig(
                contract_kw=c,
                reservation_kw=r,
                token_cap_kwh=r * cfg.token_cap_hours,
                purchase_rate_factor=cfg.purchase_rate_factor,
                purchase_policy=GREEDY,
            )
        )
    return out


def battery_configs(cfg: ScenarioConfig, tenant_cfgs: list[TenantConfig]) -> list[BatteryConfig]:
    """Size each virtual battery like the equivalent token account."""
    return [
        BatteryConfig(
            e_max_kwh=t.token_cap_kwh,
            charge_limit_kw=t.purchase_rate_factor * t.contract_kw,
            discharge_limit_kw=t.reservation_kw,
        )
        for t in tenant_cfgs
    ]


@_stage("simulate")
def simulate(cfg: ScenarioConfig, ts: TraceSet, contracts: list[float]) -> PhysicalRun:
    tcfgs = tenant_configs(cfg, contracts)
    capped_cfgs = [replace(t, reservation_kw=0.0, token_cap_kwh=0.0) for t in tcfgs]
    capped = simulate_scenario(ts, capped_cfgs, mechanism="none")
    if cfg.mechanism == "none":
        scenario = capped
    elif cfg.mechanism == "tokens":
        scenario = simulate_scenario(ts, tcfgs, mechanism="tokens")
    else:
        op = BatteryConfig(cfg.operator_battery_kwh, cfg.operator_battery_kw, cfg.operator_battery_kw)
        scenario = simulate_battery_scenario(ts, contracts, battery_configs(cfg, tcfgs), op)
    return PhysicalRun(ts, contracts, tcfgs, scenario, capped)


def run_physical(cfg: ScenarioConfig) -> PhysicalRun:
    ts = build_traces(cfg)
    contracts = build_contracts(cfg, ts)
    return simulate(cfg, ts, contracts)


@_stage("economics")
def price_run(phys: PhysicalRun, pricing: PricingConfig, operator_emergency_prob: float) -> dict:
    """Size the PDU and compute every ledger for one physical run."""
    sc = phys.scenario
    prov = provision(
        phys.traces,
        phys.contracts,
        phys.capped.served_aggregate,
        sc.served_aggregate,
        operator_emergency_prob,
    )
    months = months_of(sc, pricing)
    op = operator_ledger(sc, prov, phys.tenant_cfgs, pricing, months)
    tenants = [tenant_ledger(r, c, pricing, months) for r, c in zip(sc.tenants, phys.tenant_cfgs)]
    summary = benefit_summary(op, tenants)
    return {
        "months": months,
        "provision": prov.to_dict(),
        "operator": op.to_dict(),
        "tenants": [t.to_dict() for t in tenants],
        "tenant_activity": [r.summary() for r in sc.tenants],
        "summary": summary.to_dict(),
        "sums": {
            "spoc_revenue": op.revenue_reservation + op.revenue_tokens,
            "tenant_spoc_payments": math.fsum(t.spoc_payment for t in tenants),
            "reservation_kw_total": math.fsum(c.reservation_kw for c in phys.tenant_cfgs),
        },
    }


def _reference_block(report: dict) -> dict:
    return {
        "reference_extra_provisioning_ratio": REFERENCE_EXTRA_PROVISIONING_RATIO,
        "measured_extra_provisioning_ratio": report["provision"]["extra_provisioning_ratio"],
        "note": (
            "Reference values come from proprietary production rack traces; synthetic "
            "traces reproduce signs and directions, not absolute magnitudes. Dollar "
            "amounts scale linearly with the simulated duration."
        ),
    }


def run_scenario(cfg: ScenarioConfig) -> dict:
    phys = run_physical(cfg)
    report = {"config": cfg.to_dict(), "mechanism": cfg.mechanism}
    report.update(price_run(phys, cfg.pricing, cfg.operator_emergency_prob))
    report["reference"] = _reference_block(report)
    return report


@_stage("provision")
def run_provision(cfg: ScenarioConfig) -> dict:
    """Sizing only: contracts and both PDU capacities."""
    phys = run_physical(cfg)
    prov = provision(
        phys.traces, phys.contracts, phys.capped.served_aggregate,
        phys.scenario.served_aggregate, cfg.operator_emergency_prob,
    )
    return {"config": cfg.to_dict(), "provision": prov.to_dict()}


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axis: str
    values: list

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        object.__setattr__(self, "values", list(self.values))
        for v in self.values:
            self.apply(v)

    def apply(self, value) -> ScenarioConfig:
        b = self.base
        if self.axis == "reservation_price":
            return replace(b, pricing=replace(b.pricing, reservation_price_usd_per_kw_month=float(value)))
        if self.axis == "usage_price":
            return replace(b, pricing=replace(b.pricing, usage_price_usd_per_kwh=float(value)))
        if self.axis == "tenant_count":
            if int(value) != value:
                raise ConfigError(f"tenant_count must be an integer, got {value!r}")
            probs = b.tenant_emergency_prob
            if isinstance(probs, list):
                raise ConfigError("tenant_count sweeps need a scalar tenant_emergency_prob")
            return replace(b, n_tenants=int(value))
        if self.axis == "operator_emergency_prob":
            return replace(b, operator_emergency_prob=float(value))
        return replace(b, tenant_emergency_prob=float(value))


@dataclass
class SweepTable:
    axis: str
    columns: list[str]
    rows: list[list[Any]]

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


BASE_COLUMNS = [
    "profit_increase_pct",
    "mean_savings_pct",
    "min_savings_pct",
    "mutual_benefit",
    "extra_provisioning_ratio",
    "pdu_baseline_kw",
    "pdu_with_sprint_kw",
]


def _row_from(report: dict) -> dict:
    s = report["summary"]
    p = report["provision"]
    row = {
        "profit_increase_pct": s["profit_increase_pct"],
        "mean_savings_pct": s["mean_savings_pct"],
        "min_savings_pct": s["min_savings_pct"],
        "mutual_benefit": s["mutual_benefit"],
        "extra_provisioning_ratio": p["extra_provisioning_ratio"],
        "pdu_baseline_kw": p["pdu_baseline_kw"],
        "pdu_with_sprint_kw": p["pdu_with_sprint_kw"],
    }
    for i, t in enumerate(report["tenants"]):
        row[f"savings_pct_{i + 1}"] = t["savings_pct"]
    return row


def _point(cfg: ScenarioConfig) -> dict:
    return _row_from(run_scenario(cfg))


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepTable:
    """One row per axis value, in the order given."""
    configs = [spec.apply(v) for v in spec.values]
    # these axes leave demand and contracts untouched
    if spec.axis in PRICE_AXES + ("operator_emergency_prob",) and configs:
        phys = run_physical(spec.base)
        rows = [_row_from(price_run(phys, c.pricing, c.operator_emergency_prob)) for c in configs]
    elif jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point, configs))
    else:
        rows = [_point(c) for c in configs]

    n_max = max((sum(k.startswith("savings_pct_") for k in r) for r in rows), default=spec.base.n_tenants)
    columns = [spec.axis, *BASE_COLUMNS, *(f"savings_pct_{i + 1}" for i in range(n_max))]
    table = []
    for v, r in zip(spec.values, rows):
        table.append([v, *(r.get(c) for c in columns[1:])])
    return SweepTable(spec.axis, columns, table)


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, NaN to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("True", "False"):
        return text == "True"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def emit_report(obj, format: str, path) -> Path:
    """Write a scenario report (dict) or a SweepTable as JSON or CSV."""
    path = Path(path)
    if format not in ("json", "csv"):
        raise ConfigError(f"unknown report format {format!r}")
    if isinstance(obj, SweepTable):
        if format == "json":
            data = {"axis": obj.axis, "columns": obj.columns, "rows": obj.rows}
            path.write_text(json.dumps(_clean(data), indent=2, allow_nan=False) + "\n")
        else:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(obj.columns)
                for row in obj.rows:
                    w.writerow([_cell(v) for v in _clean(row)])
        return path

    data = _clean(obj)
    if format == "json":
        path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n")
    else:
        flat = _flatten(data)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(flat))
            w.writerow([_cell(v) for v in flat.values()])
    return path


def read_table(path) -> SweepTable:
    """Load a sweep table written by :func:`emit_report` in CSV form."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    columns = rows[0]
    return SweepTable(columns[0], columns, [[_parse_cell(c) for c in r] for r in rows[1:]])


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
