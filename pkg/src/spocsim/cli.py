"""Command-line entry point: ``spocsim {simulate,sweep,provision,synth}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .battery import write_battery_log
from .errors import SpocError
from .harness import (
    AXES,
    DEFAULT_SYNTH,
    MECHANISMS,
    ScenarioConfig,
    SweepSpec,
    emit_report,
    run_physical,
    run_provision,
    run_scenario,
    run_sweep,
)
from .token_economy import write_event_log
from .trace import SynthSpec, TraceSet, save_traces, scale_and_split, synthesize_trace

log = logging.getLogger("spocsim")


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON scenario config; flags below override it")
    p.add_argument("--trace", dest="trace_file", help="trace CSV instead of synthetic traces")
    p.add_argument("--trace-format", choices=["wide", "long"])
    p.add_argument("--tenants", dest="n_tenants", type=int)
    p.add_argument("--per-tenant-mean-kw", type=float)
    p.add_argument("--tenant-emergency-prob", type=float)
    p.add_argument("--reservation-fraction", type=float)
    p.add_argument("--mechanism", choices=MECHANISMS)
    p.add_argument("--purchase-rate-factor", type=float)
    p.add_argument("--token-cap-hours", type=float)
    p.add_argument("--operator-emergency-prob", type=float)
    p.add_argument("--reservation-price", type=float)
    p.add_argument("--usage-price", type=float)
    p.add_argument("--n-slots", type=int, help="synthetic trace length")
    p.add_argument("--seed", type=int)


_DIRECT = (
    "trace_file", "trace_format", "n_tenants", "per_tenant_mean_kw", "tenant_emergency_prob",
    "reservation_fraction", "mechanism", "purchase_rate_factor", "token_cap_hours",
    "operator_emergency_prob", "seed",
)


def config_from_args(args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    overrides = {k: getattr(args, k) for k in _DIRECT if getattr(args, k) is not None}
    pricing = cfg.pricing
    if args.reservation_price is not None:
        pricing = replace(pricing, reservation_price_usd_per_kw_month=args.reservation_price)
    if args.usage_price is not None:
        pricing = replace(pricing, usage_price_usd_per_kwh=args.usage_price)
    synth = dict(cfg.synth)
    if args.n_slots is not None:
        synth["n_slots"] = args.n_slots
    return replace(cfg, pricing=pricing, synth=synth, **overrides)


def _parse_values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(int(tok) if tok.lstrip("-").isdigit() else float(tok))
    return out


def cmd_simulate(args) -> int:
    cfg = config_from_args(args)
    report = run_scenario(cfg)
    emit_report(report, args.format, args.out)
    if args.event_log:
        phys = run_physical(cfg)
        if cfg.mechanism == "battery":
            write_battery_log(phys.scenario, args.event_log)
        else:
            write_event_log(phys.scenario, args.event_log)
    s = report["summary"]
    log.info("profit increase %s%%, min tenant savings %s%%", s["profit_increase_pct"], s["min_savings_pct"])
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec(config_from_args(args), args.axis, _parse_values(args.values))
    table = run_sweep(spec, jobs=args.jobs)
    emit_report(table, args.format, args.out)
    log.info("wrote %d rows to %s", len(table.rows), args.out)
    return 0


def cmd_provision(args) -> int:
    emit_report(run_provision(config_from_args(args)), args.format, args.out)
    return 0


def cmd_synth(args) -> int:
    spec = SynthSpec(
        mean_kw=args.mean_kw,
        diurnal_amplitude_kw=args.diurnal_amplitude_kw,
        burst_prob=args.burst_prob,
        burst_scale=args.burst_scale,
        noise_frac=args.noise_frac,
        n_slots=args.n_slots,
        slot_hours=args.slot_hours,
        seed=args.seed,
    )
    source = synthesize_trace(spec, id="source")
    ts = TraceSet([source]) if args.tenants == 1 else scale_and_split(source, args.tenants, source.mean_kw, seed=args.seed + 1)
    save_traces(ts, args.out, args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spocsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--event-log", help="optional per-slot CSV log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one parameter axis")
    _add_scenario_flags(p)
    p.add_argument("--axis", required=True, choices=AXES)
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("provision", help="contract and PDU sizing only")
    _add_scenario_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_provision)

    p = sub.add_parser("synth", help="write synthetic traces to CSV")
    p.add_argument("--mean-kw", type=float, default=DEFAULT_SYNTH["mean_kw"])
    p.add_argument("--diurnal-amplitude-kw", type=float, default=DEFAULT_SYNTH["diurnal_amplitude_kw"])
    p.add_argument("--burst-prob", type=float, default=DEFAULT_SYNTH["burst_prob"])
    p.add_argument("--burst-scale", type=float, default=DEFAULT_SYNTH["burst_scale"])
    p.add_argument("--noise-frac", type=float, default=DEFAULT_SYNTH["noise_frac"])
    p.add_argument("--n-slots", type=int, default=DEFAULT_SYNTH["n_slots"])
    p.add_argument("--slot-hours", type=float, default=DEFAULT_SYNTH["slot_hours"])
    p.add_argument("--tenants", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["wide", "long"], default="wide")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (SpocError, OSError, ValueError) as exc:
        print(f"spocsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
