"""Single-datacenter power-mode scheduling under a percentile SLA.

Provides the descending-demand greedy scheduler, an exhaustive optimality
oracle for small horizons, a randomized benchmark, and horizon-level billing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (
    CostReport,
    DemandTrace,
    PowerModel,
    Schedule,
    SlaPolicy,
    SlaViolated,
    Tariff,
    billing_cost,
    dynamic_power_kw,
    sla_satisfied,
)

__all__ = [
    "TooLarge",
    "ScheduleResult",
    "schedule_greedy",
    "schedule_bruteforce",
    "schedule_random",
    "evaluate_schedule",
    "schedule_horizon",
]

BRUTEFORCE_MAX_SLOTS = 22


class TooLarge(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class ScheduleResult:
    schedule: Schedule
    cost: CostReport
    low_mode_demand_fraction: float


def power_series(schedule: Schedule, trace: DemandTrace, policy: SlaPolicy, power_model: PowerModel) -> np.ndarray:
    """Per-slot dynamic power (kW): high-mode completion ratio where the flag
    is 1, the worst-case floor ratio where it is 0."""
    alphas = np.where(schedule.modes == 1, policy.alpha_high, policy.alpha_low)
    return np.asarray(dynamic_power_kw(alphas, trace.demand, power_model))


def evaluate_schedule(
    schedule: Schedule,
    trace: DemandTrace,
    policy: SlaPolicy,
    tariff: Tariff,
    power_model: PowerModel,
) -> CostReport:
    """Bill a schedule for one cycle; rejects SLA-violating schedules."""
    if not sla_satisfied(schedule, trace, policy):
        raise SlaViolated("schedule does not meet the percentile quality guarantee")
    series = power_series(schedule, trace, policy, power_model)
    total = float(np.sum(trace.demand))
    attainment = float(np.sum(schedule.modes * trace.demand)) / total if total > 0 else 1.0
    return billing_cost(
        series,
        tariff,
        trace.slot_minutes,
        sla_attainment=min(attainment, 1.0),
        idle_kw=power_model.idle_kw,
    )


def _result(schedule, trace, policy, tariff, power_model) -> ScheduleResult:
    cost = evaluate_schedule(schedule, trace, policy, tariff, power_model)
    return ScheduleResult(
        schedule=schedule,
        cost=cost,
        low_mode_demand_fraction=1.0 - cost.sla_attainment,
    )


def _trial_and_error(trace: DemandTrace, policy: SlaPolicy, order: np.ndarray) -> Schedule:
    """Visit slots in the given order, switching each to low mode when the SLA
    still holds afterwards."""
    d = trace.demand
    total = float(np.sum(d))
    budget = (1.0 - policy.percentile) * total + 1e-9 * total
    low_sum = 0.0
    modes = np.ones(len(trace), dtype=int)
    for t in order:
        if low_sum + d[t] <= budget:
            modes[t] = 0
            low_sum += d[t]
    return Schedule(modes)


def schedule_greedy(
    trace: DemandTrace,
    policy: SlaPolicy,
    tariff: Tariff,
    power_model: PowerModel,
) -> ScheduleResult:
    """Greedy schedule: start all-high, then try slots in strictly descending
    demand order (ties broken by earliest index), keeping each switch to low
    mode only if the SLA still holds."""
    order = np.argsort(-trace.demand, kind="stable")
    schedule = _trial_and_error(trace, policy, order)
    return _result(schedule, trace, policy, tariff, power_model)


def schedule_random(
    trace: DemandTrace,
    policy: SlaPolicy,
    tariff: Tariff,
    power_model: PowerModel,
    seed: int = 0,
) -> ScheduleResult:
    """Benchmark that spends the low-mode budget in uniformly shuffled slot order."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(trace))
    schedule = _trial_and_error(trace, policy, order)
    return _result(schedule, trace, policy, tariff, power_model)


def schedule_bruteforce(
    trace: DemandTrace,
    policy: SlaPolicy,
    tariff: Tariff,
    power_model: PowerModel,
) -> ScheduleResult:
    """Exhaustive optimality oracle: enumerates all 2^T schedules, keeps the
    cheapest SLA-feasible one, breaking cost ties by lexicographically
    smallest mode vector."""
    T = len(trace)
    if T > BRUTEFORCE_MAX_SLOTS:
        raise TooLarge(f"enumeration limited to {BRUTEFORCE_MAX_SLOTS} slots, got {T}")
    d = trace.demand
    total = float(np.sum(d))
    masks = np.arange(2**T, dtype=np.int64)
    X = ((masks[:, None] >> np.arange(T)) & 1).astype(float)  # (2^T, T)
    feasible = X @ d >= policy.percentile * total - 1e-9 * total
    X = X[feasible]
    a_hi, a_lo = policy.alpha_high, policy.alpha_low
    alphas = a_lo + (a_hi - a_lo) * X
    coeff = (power_model.peak_w - power_model.idle_w) / power_model.requests_per_server_slot / 1000.0
    series = coeff * alphas * d[None, :]
    costs = (
        tariff.demand_price_usd_per_kw * series.max(axis=1)
        + tariff.energy_price_usd_per_kwh * trace.slot_hours * series.sum(axis=1)
    )
    best = float(np.min(costs))
    tied = np.flatnonzero(costs <= best + 1e-12 * max(best, 1.0))
    winner = min(tied, key=lambda k: tuple(X[k].astype(int)))
    return _result(Schedule(X[winner].astype(int)), trace, policy, tariff, power_model)


def schedule_horizon(
    daily_traces: Sequence[DemandTrace],
    policy: SlaPolicy,
    tariff: Tariff,
    power_model: PowerModel,
    mode: str = "per-day",
) -> ScheduleResult:
    """Bill a multi-day horizon as one cycle.

    ``per-day`` schedules each day independently with the day's demand only;
    ``whole-horizon`` schedules the concatenated trace at once (the
    full-future-knowledge benchmark).
    """
    if not daily_traces:
        raise ValueError("need at least one day")
    slot_minutes = daily_traces[0].slot_minutes
    if any(t.slot_minutes != slot_minutes for t in daily_traces):
        raise ValueError("all days must share the slot length")
    full = DemandTrace(np.concatenate([t.demand for t in daily_traces]), slot_minutes)
    if mode == "whole-horizon":
        return schedule_greedy(full, policy, tariff, power_model)
    if mode != "per-day":
        raise ValueError(f"unknown mode {mode!r}")
    modes = np.concatenate(
        [schedule_greedy(t, policy, tariff, power_model).schedule.modes for t in daily_traces]
    )
    return _result(Schedule(modes), full, policy, tariff, power_model)
