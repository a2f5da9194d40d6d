"""Data ingestion and synthesis: tariff table, trace CSV I/O, synthetic
diurnal traces, client splits, and latency matrices."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .model import DemandTrace, Tariff

__all__ = [
    "ParseError",
    "GapError",
    "NonPositiveLatency",
    "TariffTable",
    "DEFAULT_TARIFFS",
    "load_trace",
    "save_trace",
    "synth_trace",
    "split_clients",
    "load_latency",
    "save_latency",
    "synth_latency",
]


class ParseError(ValueError):
    """Malformed input file; message carries the offending line number."""


class GapError(ValueError):
    """Trace slots are not contiguous from zero."""


class NonPositiveLatency(ValueError):
    """Latency matrices must be strictly positive."""


# Reference month used to derive per-unit prices from published monthly bills:
# 10,000 kW peak and 6,000 kW average over 720 hours.
_REF_PEAK_KW = 10_000.0
_REF_KWH = 6_000.0 * 720.0


def _derived(name: str, monthly_demand_usd: float, monthly_energy_usd: float) -> Tariff:
    return Tariff(
        name=name,
        demand_price_usd_per_kw=monthly_demand_usd / _REF_PEAK_KW,
        energy_price_usd_per_kwh=monthly_energy_usd / _REF_KWH,
    )


#: Bundled utility tariffs. SC carries the published per-unit rates; the other
#: five are backed out from monthly bills at the reference load above.
DEFAULT_TARIFFS: Dict[str, Tariff] = {
    t.name: t
    for t in [
        _derived("OR", 38_400.0, 147_312.0),
        _derived("IA", 62_600.0, 114_236.0),
        _derived("OK", 103_900.0, 93_312.0),
        _derived("NC", 111_000.0, 240_580.0),
        Tariff("SC", demand_price_usd_per_kw=14.76, energy_price_usd_per_kwh=0.05037),
        _derived("GA", 165_500.0, 24_002.0),
    ]
}


@dataclass(frozen=True)
class TariffTable:
    tariffs: Dict[str, Tariff]

    @classmethod
    def bundled(cls) -> "TariffTable":
        return cls(dict(DEFAULT_TARIFFS))

    def __getitem__(self, name: str) -> Tariff:
        try:
            return self.tariffs[name]
        except KeyError:
            raise KeyError(f"unknown tariff {name!r}; bundled: {sorted(self.tariffs)}")


def load_trace(path, slot_minutes: int = 15) -> DemandTrace:
    """Read a `slot,requests` CSV with slots contiguous from 0."""
    demand = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["slot", "requests"]:
            raise ParseError(f"{path}:1: expected header 'slot,requests'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                slot = int(row[0])
                value = float(row[1])
            except (ValueError, IndexError):
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}")
            if slot != len(demand):
                raise GapError(f"{path}:{lineno}: expected slot {len(demand)}, got {slot}")
            if value < 0:
                raise ParseError(f"{path}:{lineno}: negative demand {value}")
            demand.append(value)
    if not demand:
        raise ParseError(f"{path}: no demand rows")
    return DemandTrace(np.array(demand), slot_minutes)


def save_trace(trace: DemandTrace, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("slot,requests\n")
        for t, v in enumerate(trace.demand):
            f.write(f"{t},{v:.9g}\n")


def synth_trace(
    base: float,
    amplitude: float,
    period_slots: int = 96,
    noise_sd: float = 0.0,
    seed: int = 0,
    days: int = 1,
    slot_minutes: int = 15,
) -> DemandTrace:
    """Diurnal sinusoid with optional gaussian noise, clipped at zero."""
    if not base >= amplitude >= 0:
        raise ValueError("require base >= amplitude >= 0")
    if period_slots < 1 or days < 1:
        raise ValueError("period_slots and days must be >= 1")
    t = np.arange(days * period_slots)
    demand = base + amplitude * np.sin(2 * np.pi * t / period_slots)
    if noise_sd > 0:
        demand = demand + np.random.default_rng(seed).normal(0.0, noise_sd, size=t.size)
    return DemandTrace(np.maximum(demand, 0.0), slot_minutes)


def split_clients(trace: DemandTrace, num_clients: int, sd: float = 0.3, seed: int = 0) -> np.ndarray:
    """Split an aggregate trace into per-client rows with normal weights.

    Weights are drawn from N(1, sd), floored at 0.01 to keep every client's
    share positive, then normalized; column sums reproduce the aggregate.
    Returns an (I, T) matrix.
    """
    if num_clients < 1:
        raise ValueError("need at least one client")
    rng = np.random.default_rng(seed)
    w = np.maximum(rng.normal(1.0, sd, size=num_clients), 0.01)
    w = w / w.sum()
    return np.outer(w, trace.demand)


def load_latency(path) -> np.ndarray:
    """Read a headerless CSV latency matrix (clients x datacenters, ms)."""
    rows = []
    with open(path, newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed row {row!r}")
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise ParseError(f"{path}:{lineno}: ragged row")
    if not rows:
        raise ParseError(f"{path}: empty latency file")
    matrix = np.array(rows)
    if np.any(matrix <= 0):
        raise NonPositiveLatency(f"{path}: latencies must be strictly positive")
    return matrix


def save_latency(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as f:
        for row in np.atleast_2d(matrix):
            f.write(",".join(f"{x:.9g}" for x in row) + "\n")


def synth_latency(
    num_clients: int,
    num_datacenters: int,
    base_ms: float = 65.0,
    spread_ms: float = 110.0,
    dc_offset_step_ms: float = 8.0,
    seed: int = 0,
    dc_offsets_ms: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Synthetic latency matrix: a per-client base spread around ``base_ms``
    plus per-datacenter geographic offsets and mild per-pair jitter.

    With ``spread_ms`` zero every client row is identical.
    """
    if num_clients < 1 or num_datacenters < 1:
        raise ValueError("need at least one client and one datacenter")
    rng = np.random.default_rng(seed)
    base = base_ms + spread_ms * (rng.random(num_clients) - 0.5)
    if dc_offsets_ms is None:
        dc_offsets_ms = dc_offset_step_ms * np.arange(num_datacenters)
    jitter = 0.15 * spread_ms * rng.random((num_clients, num_datacenters))
    matrix = base[:, None] + np.asarray(dc_offsets_ms, dtype=float)[None, :] + jitter
    if np.any(matrix <= 0):
        raise NonPositiveLatency("synthesized non-positive latency; adjust base/spread")
    return matrix
