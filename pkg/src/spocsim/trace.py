"""Fixed-interval power-demand traces: construction, CSV I/O, synthesis and queries.

Two CSV layouts are understood. Both start with a ``# slot_hours=<x>`` comment
line declaring the sample duration in hours.

wide::

    # slot_hours=1
    t,rack_a,rack_b
    0,3.5,4.0

long::

    # slot_hours=1
    slot,tenant_id,power_kw
    0,rack_a,3.5
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyTraceSet,
    InvalidSynthSpec,
    MissingSlotDuration,
    MixedSlotDurations,
    NegativeSample,
    RaggedTraces,
    TraceError,
    TraceFileMissing,
)

HOURS_PER_DAY = 24.0

_SLOT_RE = re.compile(r"^\s*#\s*slot_hours\s*=\s*(\S+)\s*$")


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PowerTrace:
    """Power demand in kW sampled every ``slot_hours`` hours."""

    id: str
    slot_hours: float
    samples: np.ndarray

    def __post_init__(self):
        samples = _frozen_array(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise TraceError(f"trace {self.id!r} must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise TraceError(f"trace {self.id!r} contains non-finite samples")
        if np.any(samples < 0):
            raise NegativeSample(f"trace {self.id!r} has a negative sample")
        if not (self.slot_hours > 0 and math.isfinite(self.slot_hours)):
            raise TraceError(f"slot_hours must be positive, got {self.slot_hours}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "slot_hours", float(self.slot_hours))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def energy_kwh(self) -> float:
        return self.slot_hours * math.fsum(self.samples)

    @property
    def duration_hours(self) -> float:
        return self.slot_hours * len(self)

    @property
    def mean_kw(self) -> float:
        return math.fsum(self.samples) / len(self)

    @property
    def peak_kw(self) -> float:
        return float(self.samples.max())

    def with_samples(self, samples, id: str | None = None) -> "PowerTrace":
        return PowerTrace(self.id if id is None else id, self.slot_hours, samples)

    def same_as(self, other: "PowerTrace") -> bool:
        return (
            self.id == other.id
            and self.slot_hours == other.slot_hours
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, eq=False)
class TraceSet:
    """Aligned traces: identical length and slot duration."""

    traces: tuple[PowerTrace, ...] = field(default_factory=tuple)

    def __post_init__(self):
        traces = tuple(self.traces)
        object.__setattr__(self, "traces", traces)
        if not traces:
            return
        slot = traces[0].slot_hours
        n = len(traces[0])
        for tr in traces[1:]:
            if tr.slot_hours != slot:
                raise MixedSlotDurations(
                    f"trace {tr.id!r} has slot_hours {tr.slot_hours}, expected {slot}"
                )
            if len(tr) != n:
                raise RaggedTraces(f"trace {tr.id!r} has {len(tr)} samples, expected {n}")

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)

    def __getitem__(self, i) -> PowerTrace:
        return self.traces[i]

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.traces]

    @property
    def slot_hours(self) -> float:
        self._require_nonempty()
        return self.traces[0].slot_hours

    @property
    def n_slots(self) -> int:
        self._require_nonempty()
        return len(self.traces[0])

    def matrix(self) -> np.ndarray:
        """Samples as an (n_traces, n_slots) array."""
        self._require_nonempty()
        return np.vstack([t.samples for t in self.traces])

    def _require_nonempty(self):
        if not self.traces:
            raise EmptyTraceSet("trace set is empty")


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------

def _read_lines(path: Path) -> tuple[float, list[str]]:
    if not path.is_file():
        raise TraceFileMissing(f"trace file not found: {path}")
    slots = set()
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            m = _SLOT_RE.match(line)
            if m:
                try:
                    slots.add(float(m.group(1)))
                except ValueError as exc:
                    raise MissingSlotDuration(f"unparseable slot_hours in {path}") from exc
                continue
            if line.lstrip().startswith("#") or not line.strip():
                continue
            body.append(line)
    if not slots:
        raise MissingSlotDuration(f"{path} does not declare '# slot_hours=<x>'")
    if len(slots) > 1:
        raise MixedSlotDurations(f"{path} declares several slot durations: {sorted(slots)}")
    return slots.pop(), body


def _parse_kw(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise TraceError(f"non-numeric power value {text!r} at {where}") from exc
    if value < 0:
        raise NegativeSample(f"negative power {value} at {where}")
    return value


def load_traces(path, format: str = "wide") -> TraceSet:
    """Read a TraceSet from a wide or long CSV file."""
    path = Path(path)
    slot_hours, body = _read_lines(path)
    rows = list(csv.reader(body))
    if not rows:
        raise EmptyTraceSet(f"{path} has no header row")
    header, data = rows[0], rows[1:]

    if format == "wide":
        names = [h.strip() for h in header[1:]]
        if not names:
            raise EmptyTraceSet(f"{path} has no tenant columns")
        columns: list[list[float]] = [[] for _ in names]
        for lineno, row in enumerate(data, start=2):
            if len(row) != len(header):
                raise RaggedTraces(
                    f"{path} row {lineno} has {len(row)} fields, expected {len(header)}"
                )
            for col, cell in zip(columns, row[1:]):
                col.append(_parse_kw(cell, f"{path} row {lineno}"))
        return TraceSet([PowerTrace(n, slot_hours, c) for n, c in zip(names, columns)])

    if format == "long":
        expected = ["slot", "tenant_id", "power_kw"]
        if [h.strip() for h in header] != expected:
            raise TraceError(f"{path} long header must be {','.join(expected)}")
        per_tenant: dict[str, dict[int, float]] = {}
        for lineno, row in enumerate(data, start=2):
            if len(row) != 3:
                raise RaggedTraces(f"{path} row {lineno} has {len(row)} fields, expected 3")
            slot, tenant, kw = int(row[0]), row[1].strip(), row[2]
            slots = per_tenant.setdefault(tenant, {})
            if slot in slots:
                raise RaggedTraces(f"{path} duplicate slot {slot} for tenant {tenant!r}")
            slots[slot] = _parse_kw(kw, f"{path} row {lineno}")
        if not per_tenant:
            raise EmptyTraceSet(f"{path} has no data rows")
        lengths = {t: len(s) for t, s in per_tenant.items()}
        if len(set(lengths.values())) > 1:
            raise RaggedTraces(f"{path} tenants have unequal sample counts: {lengths}")
        traces = []
        for tenant, slots in per_tenant.items():
            if sorted(slots) != list(range(len(slots))):
                raise RaggedTraces(f"{path} tenant {tenant!r} slots are not 0..n-1")
            traces.append(PowerTrace(tenant, slot_hours, [slots[i] for i in range(len(slots))]))
        return TraceSet(traces)

    raise TraceError(f"unknown trace format {format!r} (expected 'wide' or 'long')")


def save_traces(ts: TraceSet, path, format: str = "wide") -> Path:
    """Write a TraceSet in the layout :func:`load_traces` reads back losslessly."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# slot_hours={ts.slot_hours!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        if format == "wide":
            w.writerow(["t", *ts.ids])
            m = ts.matrix()
            for i in range(ts.n_slots):
                w.writerow([i, *(repr(float(v)) for v in m[:, i])])
        elif format == "long":
            w.writerow(["slot", "tenant_id", "power_kw"])
            for tr in ts:
                for i, v in enumerate(tr.samples):
                    w.writerow([i, tr.id, repr(float(v))])
        else:
            raise TraceError(f"unknown trace format {format!r}")
    return path


# --------------------------------------------------------------------------
# Synthesis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    """Diurnal sinusoid with Bernoulli multiplicative bursts.

    ``noise_frac`` adds zero-mean multiplicative Gaussian jitter; it defaults
    to 0 so the generator degenerates to a constant when the other shape
    terms are switched off.
    """

    mean_kw: float = 10.0
    diurnal_amplitude_kw: float = 3.0
    burst_prob: float = 0.03
    burst_scale: float = 1.5
    n_slots: int = 43_200
    slot_hours: float = 1 / 60
    seed: int = 0
    noise_frac: float = 0.0

    def __post_init__(self):
        if not self.mean_kw > 0:
            raise InvalidSynthSpec("mean_kw must be > 0")
        if not 0 <= self.burst_prob <= 1:
            raise InvalidSynthSpec("burst_prob must lie in [0, 1]")
        if not self.burst_scale >= 1:
            raise InvalidSynthSpec("burst_scale must be >= 1")
        if self.diurnal_amplitude_kw < 0:
            raise InvalidSynthSpec("diurnal_amplitude_kw must be >= 0")
        if self.noise_frac < 0:
            raise InvalidSynthSpec("noise_frac must be >= 0")
        if int(self.n_slots) != self.n_slots or self.n_slots < 1:
            raise InvalidSynthSpec("n_slots must be a positive integer")
        if not self.slot_hours > 0:
            raise InvalidSynthSpec("slot_hours must be > 0")


def synthesize_components(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (samples, burst_mask) for ``spec``; a pure function of the spec."""
    rng = np.random.default_rng(spec.seed)
    n = int(spec.n_slots)
    bursts = rng.random(n) < spec.burst_prob
    jitter = rng.standard_normal(n)

    hours = np.arange(n) * spec.slot_hours
    # Scale the base level down so bursts leave the expected mean at mean_kw.
    norm = 1.0 + spec.burst_prob * (spec.burst_scale - 1.0)
    base = (spec.mean_kw + spec.diurnal_amplitude_kw * np.sin(2 * np.pi * hours / HOURS_PER_DAY)) / norm
    if spec.noise_frac > 0:
        base = base * (1.0 + spec.noise_frac * jitter)
    samples = np.where(bursts, base * spec.burst_scale, base)
    return np.clip(samples, 0.0, None), bursts


def synthesize_trace(spec: SynthSpec, id: str = "synthetic") -> PowerTrace:
    samples, _ = synthesize_components(spec)
    return PowerTrace(id, spec.slot_hours, samples)


# --------------------------------------------------------------------------
# Transformations and queries
# --------------------------------------------------------------------------

def scale_and_split(
    trace: PowerTrace,
    n: int,
    per_tenant_mean_kw: float,
    seed: int = 0,
    shifts: Sequence[int] | None = None,
) -> TraceSet:
    """Derive ``n`` tenant traces from one source trace.

    Each copy is rescaled to ``per_tenant_mean_kw`` and rotated by a seeded
    random offset; pass ``shifts`` to fix the offsets explicitly.
    """
    if n < 1:
        raise TraceError("n must be >= 1")
    if not per_tenant_mean_kw > 0:
        raise TraceError("per_tenant_mean_kw must be > 0")
    src_mean = trace.mean_kw
    if src_mean <= 0:
        raise TraceError("source trace has zero mean and cannot be rescaled")
    if shifts is None:
        rng = np.random.default_rng(seed)
        shifts = rng.integers(0, len(trace), size=n)
    elif len(shifts) != n:
        raise TraceError(f"got {len(shifts)} shifts for {n} tenants")

    scaled = trace.samples * (per_tenant_mean_kw / src_mean)
    out = []
    for i, shift in enumerate(shifts):
        out.append(PowerTrace(f"tenant{i + 1}", trace.slot_hours, np.roll(scaled, int(shift))))
    return TraceSet(out)


def aggregate(ts: TraceSet, id: str = "aggregate") -> PowerTrace:
    if len(ts) == 0:
        raise EmptyTraceSet("cannot aggregate an empty trace set")
    if len(ts) == 1:
        return ts[0]
    return PowerTrace(id, ts.slot_hours, ts.matrix().sum(axis=0))


def exceedance_prob(trace: PowerTrace, capacity_kw: float) -> float:
    """Fraction of slots whose demand strictly exceeds ``capacity_kw``."""
    if capacity_kw < 0:
        raise ValueError("capacity_kw must be >= 0")
    return int(np.count_nonzero(trace.samples > capacity_kw)) / len(trace)


def total_energy(traces: Iterable[PowerTrace]) -> float:
    return math.fsum(t.energy_kwh for t in traces)
