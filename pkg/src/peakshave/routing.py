"""Geo-distributed request routing: problem data, feasibility, objectives,
non-iterative baselines, and the route-then-schedule pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from .model import CostReport, DemandTrace, PowerModel, SlaPolicy, Tariff, billing_cost
from .scheduler import ScheduleResult, schedule_greedy
from .subproblems import Infeasible

__all__ = [
    "RoutingProblem",
    "RoutingSolution",
    "RoutingCost",
    "Violation",
    "check_feasible",
    "routing_objective",
    "route_closest",
    "PipelineResult",
    "schedule_allocation",
    "solve_pipeline",
    "baseline_energy_only",
    "baseline_demand_only",
]

FEAS_RTOL = 1e-6


def _kw_per_request(pm: PowerModel, alpha: float) -> float:
    """Marginal dynamic power (kW) of one extra request per slot."""
    return alpha * (pm.peak_w - pm.idle_w) / pm.requests_per_server_slot / 1000.0


@dataclass(frozen=True)
class RoutingProblem:
    """Allocation of per-client demand across datacenters over a horizon.

    Shapes: client_demand (I, T), latency_ms (I, J); tariffs and power_models
    have length J. Infeasible instances (unreachable clients, aggregate
    demand above aggregate capacity) are rejected at construction.
    """

    client_demand: np.ndarray
    latency_ms: np.ndarray
    latency_bound_ms: float
    tariffs: List[Tariff]
    power_models: List[PowerModel]
    sla: SlaPolicy = field(default_factory=SlaPolicy)
    slot_minutes: int = 15

    def __post_init__(self):
        D = np.asarray(self.client_demand, dtype=float)
        L = np.asarray(self.latency_ms, dtype=float)
        if D.ndim != 2 or L.ndim != 2:
            raise ValueError("client_demand and latency_ms must be 2-D")
        if D.shape[0] != L.shape[0]:
            raise ValueError("client count mismatch between demand and latency")
        if len(self.tariffs) != L.shape[1] or len(self.power_models) != L.shape[1]:
            raise ValueError("tariffs and power_models must have one entry per datacenter")
        if np.any(D < 0):
            raise ValueError("demands must be non-negative")
        if np.any(L <= 0):
            raise ValueError("latencies must be positive")
        object.__setattr__(self, "client_demand", D)
        object.__setattr__(self, "latency_ms", L)
        reachable = (L <= self.latency_bound_ms).any(axis=1)
        needs = (D > 0).any(axis=1)
        if np.any(needs & ~reachable):
            bad = int(np.flatnonzero(needs & ~reachable)[0])
            raise Infeasible(f"client {bad} has no datacenter within the latency bound")
        if np.any(D.sum(axis=0) > self.capacities.sum() * (1 + FEAS_RTOL)):
            raise Infeasible("aggregate demand exceeds aggregate capacity in some slot")

    @property
    def num_clients(self) -> int:
        return self.client_demand.shape[0]

    @property
    def num_datacenters(self) -> int:
        return self.latency_ms.shape[1]

    @property
    def num_slots(self) -> int:
        return self.client_demand.shape[1]

    @property
    def capacities(self) -> np.ndarray:
        """Per-datacenter request capacity per slot."""
        return np.array([pm.capacity_requests_per_slot for pm in self.power_models])

    @property
    def alpha_high(self) -> float:
        return self.sla.alpha_high

    @property
    def demand_coeffs(self) -> np.ndarray:
        """$/request contribution to the demand charge of a peak-slot request."""
        a = self.alpha_high
        return np.array(
            [
                t.demand_price_usd_per_kw * _kw_per_request(pm, a)
                for t, pm in zip(self.tariffs, self.power_models)
            ]
        )

    @property
    def energy_coeffs(self) -> np.ndarray:
        """$/request marginal energy cost of serving one request."""
        a = self.alpha_high
        h = self.slot_minutes / 60.0
        return np.array(
            [
                t.energy_price_usd_per_kwh * _kw_per_request(pm, a) * h
                for t, pm in zip(self.tariffs, self.power_models)
            ]
        )


@dataclass(frozen=True)
class RoutingSolution:
    """Request allocation tensor d with shape (clients, datacenters, slots)."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 3:
            raise ValueError("allocation must be a 3-D tensor (I, J, T)")
        object.__setattr__(self, "d", d)

    def dc_load(self) -> np.ndarray:
        """Aggregate demand per datacenter per slot, shape (J, T)."""
        return self.d.sum(axis=0)


@dataclass(frozen=True)
class Violation:
    family: str  # "conservation" | "latency" | "capacity"
    index: tuple
    magnitude: float


@dataclass(frozen=True)
class RoutingCost:
    per_dc: List[CostReport]
    total: CostReport


def check_feasible(solution: RoutingSolution, problem: RoutingProblem) -> List[Violation]:
    """All constraint-family violations beyond a 1e-6 relative tolerance."""
    d = solution.d
    I, J, T = problem.num_clients, problem.num_datacenters, problem.num_slots
    if d.shape != (I, J, T):
        raise ValueError(f"allocation shape {d.shape} does not match problem {(I, J, T)}")
    out: List[Violation] = []
    D = problem.client_demand
    served = d.sum(axis=1)  # (I, T)
    gap = np.abs(served - D)
    tol = FEAS_RTOL * np.maximum(D, 1.0)
    for i, t in zip(*np.nonzero(gap > tol)):
        out.append(Violation("conservation", (int(i), int(t)), float(gap[i, t])))
    lat = np.einsum("ijt,ij->it", d, problem.latency_ms)
    lat_cap = problem.latency_bound_ms * D
    excess = lat - lat_cap
    for i, t in zip(*np.nonzero(excess > FEAS_RTOL * np.maximum(lat_cap, 1.0))):
        out.append(Violation("latency", (int(i), int(t)), float(excess[i, t])))
    load = d.sum(axis=0)  # (J, T)
    over = load - problem.capacities[:, None]
    for j, t in zip(*np.nonzero(over > FEAS_RTOL * problem.capacities[:, None])):
        out.append(Violation("capacity", (int(j), int(t)), float(over[j, t])))
    return out


def routing_objective(solution: RoutingSolution, problem: RoutingProblem) -> RoutingCost:
    """Bill an allocation under the true tariffs, high-quality mode everywhere."""
    violations = check_feasible(solution, problem)
    if violations:
        raise Infeasible(f"{len(violations)} constraint violations, first: {violations[0]}")
    load = solution.dc_load()
    per_dc = []
    for j, (tariff, pm) in enumerate(zip(problem.tariffs, problem.power_models)):
        series = _kw_per_request(pm, problem.alpha_high) * load[j]
        per_dc.append(
            billing_cost(series, tariff, problem.slot_minutes, idle_kw=pm.idle_kw)
        )
    total = CostReport(
        peak_kw=sum(r.peak_kw for r in per_dc),
        demand_charge_usd=sum(r.demand_charge_usd for r in per_dc),
        energy_charge_usd=sum(r.energy_charge_usd for r in per_dc),
        total_usd=sum(r.total_usd for r in per_dc),
        idle_kw=sum(r.idle_kw for r in per_dc),
    )
    return RoutingCost(per_dc=per_dc, total=total)


def route_closest(problem: RoutingProblem) -> RoutingSolution:
    """Latency-greedy baseline: each client fills datacenters in ascending
    latency order as capacity allows, clients visited in index order."""
    I, J, T = problem.num_clients, problem.num_datacenters, problem.num_slots
    order = np.argsort(problem.latency_ms, axis=1, kind="stable")  # (I, J)
    d = np.zeros((I, J, T))
    caps = problem.capacities
    for t in range(T):
        remaining = caps.astype(float).copy()
        for i in range(I):
            left = problem.client_demand[i, t]
            for j in order[i]:
                if left <= 0:
                    break
                take = min(left, remaining[j])
                d[i, j, t] = take
                remaining[j] -= take
                left -= take
            if left > FEAS_RTOL * max(problem.client_demand[i, t], 1.0):
                raise Infeasible(f"capacity exhausted while routing client {i} at slot {t}")
    return RoutingSolution(d)


def baseline_energy_only(problem: RoutingProblem, options=None) -> RoutingSolution:
    """Route as if demand charges were zero; bill later under true tariffs."""
    from .admm import admm_solve

    zeroed = replace(
        problem,
        tariffs=[replace(t, demand_price_usd_per_kw=0.0) for t in problem.tariffs],
    )
    solution, _ = admm_solve(zeroed, options)
    return solution


def baseline_demand_only(problem: RoutingProblem, options=None) -> RoutingSolution:
    """Route as if energy charges were zero; bill later under true tariffs."""
    from .admm import admm_solve

    zeroed = replace(
        problem,
        tariffs=[replace(t, energy_price_usd_per_kwh=0.0) for t in problem.tariffs],
    )
    solution, _ = admm_solve(zeroed, options)
    return solution


@dataclass(frozen=True)
class PipelineResult:
    routing: RoutingSolution
    schedules: List[ScheduleResult]
    total: CostReport


def schedule_allocation(solution: RoutingSolution, problem: RoutingProblem) -> PipelineResult:
    """Schedule each datacenter's aggregate allocated demand independently and
    combine the per-datacenter bills."""
    load = solution.dc_load()
    schedules = []
    for j, (tariff, pm) in enumerate(zip(problem.tariffs, problem.power_models)):
        trace = DemandTrace(np.maximum(load[j], 0.0), problem.slot_minutes)
        schedules.append(schedule_greedy(trace, problem.sla, tariff, pm))
    total_demand = float(load.sum())
    attainment = (
        sum(s.cost.sla_attainment * load[j].sum() for j, s in enumerate(schedules)) / total_demand
        if total_demand > 0
        else 1.0
    )
    total = CostReport(
        peak_kw=sum(s.cost.peak_kw for s in schedules),
        demand_charge_usd=sum(s.cost.demand_charge_usd for s in schedules),
        energy_charge_usd=sum(s.cost.energy_charge_usd for s in schedules),
        total_usd=sum(s.cost.total_usd for s in schedules),
        sla_attainment=min(attainment, 1.0),
        idle_kw=sum(s.cost.idle_kw for s in schedules),
    )
    return PipelineResult(routing=solution, schedules=schedules, total=total)


def solve_pipeline(problem: RoutingProblem, options=None) -> PipelineResult:
    """Route with the consensus solver at full quality, then schedule each
    datacenter's aggregate demand independently."""
    from .admm import admm_solve

    solution, log = admm_solve(problem, options)
    if not log.converged:
        raise Infeasible(
            f"routing solver did not converge within {len(log.primal)} iterations "
            f"(primal {log.primal[-1]:.3g}, dual {log.dual[-1]:.3g})"
        )
    return schedule_allocation(solution, problem)
