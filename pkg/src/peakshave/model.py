"""Physical and economic model: server power, two-part billing, response quality, SLA.

All functions here are pure and operate on immutable inputs, so they are safe
to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CapacityExceeded",
    "OutOfRange",
    "SlaViolated",
    "DemandTrace",
    "PowerModel",
    "Tariff",
    "QualityProfile",
    "SlaPolicy",
    "Schedule",
    "CostReport",
    "utilization",
    "dynamic_power_kw",
    "billing_cost",
    "quality",
    "quality_inverse",
    "sla_satisfied",
]

# Relative slack used when comparing utilization against full capacity.
CAPACITY_RTOL = 1e-12

# Relative slack on the served-demand inequality, absorbs float accumulation.
SLA_RTOL = 1e-9


class CapacityExceeded(ValueError):
    """Demand would push server utilization above 1."""


class OutOfRange(ValueError):
    """Argument outside the function's mathematical domain."""


class SlaViolated(ValueError):
    """A schedule fails the percentile quality guarantee."""


@dataclass(frozen=True)
class DemandTrace:
    """Aggregate request demand per time slot."""

    demand: np.ndarray
    slot_minutes: int = 15

    def __post_init__(self):
        d = np.asarray(self.demand, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("demand must be a non-empty 1-D sequence")
        if np.any(d < 0):
            raise ValueError("demand entries must be non-negative")
        if self.slot_minutes <= 0:
            raise ValueError("slot_minutes must be positive")
        object.__setattr__(self, "demand", d)

    def __len__(self):
        return self.demand.size

    @property
    def slot_hours(self) -> float:
        return self.slot_minutes / 60.0


@dataclass(frozen=True)
class PowerModel:
    """Affine server power model plus provisioning constants.

    ``requests_per_server_slot`` folds the cache-miss rate, per-request
    processing time, and reference cluster size into a single throughput
    constant (requests one server handles per slot at full load).
    """

    idle_w: float = 400.0
    peak_w: float = 750.0
    servers: int = 5000
    requests_per_server_slot: float = 900.0

    def __post_init__(self):
        if not self.peak_w > self.idle_w >= 0:
            raise ValueError("require peak_w > idle_w >= 0")
        if self.servers < 1:
            raise ValueError("servers must be >= 1")
        if self.requests_per_server_slot <= 0:
            raise ValueError("requests_per_server_slot must be positive")

    @property
    def capacity_requests_per_slot(self) -> float:
        """Maximum requests the cluster can fully process in one slot."""
        return self.requests_per_server_slot * self.servers

    @property
    def idle_kw(self) -> float:
        """Constant idle power floor of the always-on cluster, in kW."""
        return self.servers * self.idle_w / 1000.0


@dataclass(frozen=True)
class Tariff:
    """Two-part electricity tariff.

    ``demand_price_usd_per_kw`` applies once per billing cycle to the peak
    15-minute average power. ``energy_price_usd_per_kwh`` is the published
    volumetric rate; per-slot prices are derived internally.
    """

    name: str
    demand_price_usd_per_kw: float
    energy_price_usd_per_kwh: float

    def __post_init__(self):
        if self.demand_price_usd_per_kw < 0 or self.energy_price_usd_per_kwh < 0:
            raise ValueError("tariff prices must be non-negative")


@dataclass(frozen=True)
class QualityProfile:
    """Concave quadratic mapping completion ratio -> response quality."""

    c2: float = -0.82129975
    c1: float = 1.67356677
    c0: float = 0.14773298

    def __post_init__(self):
        if self.c2 >= 0:
            raise ValueError("quality curve must be concave (c2 < 0)")
        # Increasing on [0,1] iff derivative positive at alpha=1.
        if 2 * self.c2 * 1.0 + self.c1 <= 0:
            raise ValueError("quality curve must be strictly increasing on [0,1]")
        if self(1.0) > 1 + 1e-9:
            raise ValueError("quality at full execution must not exceed 1")

    def __call__(self, alpha):
        return self.c2 * alpha * alpha + self.c1 * alpha + self.c0


@dataclass(frozen=True)
class SlaPolicy:
    """Percentile SLA: high quality for a demand fraction, a floor for the rest."""

    percentile: float = 0.95
    high_quality: float = 0.99
    low_quality: float = 0.8
    quality_profile: QualityProfile = field(default_factory=QualityProfile)

    def __post_init__(self):
        if not 0 < self.percentile <= 1:
            raise ValueError("percentile must be in (0, 1]")
        if not 0 < self.low_quality < self.high_quality <= 1:
            raise ValueError("require 0 < low_quality < high_quality <= 1")

    @property
    def alpha_high(self) -> float:
        """Completion ratio achieving the high-quality target."""
        return quality_inverse(self.high_quality, self.quality_profile)

    @property
    def alpha_low(self) -> float:
        """Completion ratio achieving the worst-case quality floor."""
        return quality_inverse(self.low_quality, self.quality_profile)


@dataclass(frozen=True)
class Schedule:
    """Binary per-slot power-mode decisions: 1 = high mode, 0 = low mode."""

    modes: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.modes, dtype=int)
        if m.ndim != 1 or m.size < 1:
            raise ValueError("modes must be a non-empty 1-D sequence")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("modes must be binary")
        object.__setattr__(self, "modes", m)

    def __len__(self):
        return self.modes.size


@dataclass(frozen=True)
class CostReport:
    """Billing-cycle cost breakdown.

    ``idle_kw`` is the constant idle floor, reported for inclusive power
    plots but excluded from the billed total (it is unaffected by any
    scheduling or routing decision).
    """

    peak_kw: float
    demand_charge_usd: float
    energy_charge_usd: float
    total_usd: float
    sla_attainment: float = 1.0
    idle_kw: float = 0.0

    def __post_init__(self):
        if abs(self.total_usd - (self.demand_charge_usd + self.energy_charge_usd)) > 1e-6 * max(
            1.0, abs(self.total_usd)
        ):
            raise ValueError("total must equal demand charge plus energy charge")
        if not -1e-9 <= self.sla_attainment <= 1 + 1e-9:
            raise ValueError("sla_attainment must lie in [0, 1]")


def utilization(alpha, demand, model: PowerModel):
    """Average CPU load induced by serving ``demand`` at completion ratio ``alpha``.

    Raises CapacityExceeded if the load exceeds 1 beyond a relative
    tolerance of 1e-12 (equality counts as feasible).
    """
    alpha = np.asarray(alpha, dtype=float)
    demand = np.asarray(demand, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise OutOfRange("alpha must lie in [0, 1]")
    if np.any(demand < 0):
        raise OutOfRange("demand must be non-negative")
    u = alpha * demand / model.capacity_requests_per_slot
    if np.any(u > 1 + CAPACITY_RTOL):
        raise CapacityExceeded(
            f"utilization {float(np.max(u)):.6g} exceeds 1; under-provisioned cluster"
        )
    return u if u.ndim else float(u)


def dynamic_power_kw(alpha, demand, model: PowerModel):
    """Aggregate dynamic server power in kW above the idle floor.

    Linear in both arguments; the server count cancels (per-server load
    shrinks exactly as the number of loaded servers grows), but it still
    bounds feasibility through the capacity check.
    """
    utilization(alpha, demand, model)  # capacity check only
    alpha = np.asarray(alpha, dtype=float)
    demand = np.asarray(demand, dtype=float)
    kw = (model.peak_w - model.idle_w) * alpha * demand / model.requests_per_server_slot / 1000.0
    return kw if kw.ndim else float(kw)


def billing_cost(
    power_kw,
    tariff: Tariff,
    slot_minutes: int = 15,
    sla_attainment: float = 1.0,
    idle_kw: float = 0.0,
) -> CostReport:
    """Bill a power series over one cycle: peak-based demand charge + volumetric energy charge."""
    series = np.asarray(power_kw, dtype=float)
    if series.ndim != 1 or series.size == 0:
        raise ValueError("power series must be non-empty and 1-D")
    if np.any(series < 0):
        raise ValueError("power series entries must be non-negative")
    peak = float(np.max(series))
    demand_charge = peak * tariff.demand_price_usd_per_kw
    energy_charge = float(np.sum(series)) * (slot_minutes / 60.0) * tariff.energy_price_usd_per_kwh
    return CostReport(
        peak_kw=peak,
        demand_charge_usd=demand_charge,
        energy_charge_usd=energy_charge,
        total_usd=demand_charge + energy_charge,
        sla_attainment=sla_attainment,
        idle_kw=idle_kw,
    )


def quality(alpha, profile: QualityProfile | None = None):
    """Response quality at completion ratio ``alpha``."""
    profile = profile or QualityProfile()
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise OutOfRange("alpha must lie in [0, 1]")
    q = profile(alpha)
    return q if q.ndim else float(q)


def quality_inverse(q: float, profile: QualityProfile | None = None) -> float:
    """Completion ratio achieving quality ``q`` on the increasing branch.

    Solved analytically via the numerically stable quadratic formula; falls
    back to bisection when the discriminant is within 1e-12 of zero.
    """
    profile = profile or QualityProfile()
    q_lo, q_hi = profile(0.0), profile(1.0)
    if q < q_lo - 1e-12 or q > q_hi + 1e-12:
        raise OutOfRange(f"quality {q} outside attainable range [{q_lo:.8f}, {q_hi:.8f}]")
    q = min(max(q, q_lo), q_hi)
    disc = profile.c1 * profile.c1 - 4.0 * profile.c2 * (profile.c0 - q)
    if disc < 1e-12:
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if profile(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    # Smaller root of c2 a^2 + c1 a + (c0 - q) = 0, written to avoid cancellation.
    alpha = 2.0 * (q - profile.c0) / (profile.c1 + np.sqrt(disc))
    return float(min(max(alpha, 0.0), 1.0))


def sla_satisfied(schedule: Schedule, trace: DemandTrace, policy: SlaPolicy) -> bool:
    """Whether enough of the demand is served in high mode to meet the percentile SLA."""
    if len(schedule) != len(trace):
        raise ValueError("schedule and trace lengths differ")
    d = trace.demand
    total = float(np.sum(d))
    served = float(np.sum(schedule.modes * d))
    return served >= policy.percentile * total - SLA_RTOL * total
