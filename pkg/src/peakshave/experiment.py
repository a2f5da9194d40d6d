"""Experiment orchestration: resolved configs, scenario runners, and
deterministic report files (costs.json, power_series.csv, convergence.csv,
manifest.json)."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .admm import AdmmOptions, ConvergenceLog, admm_solve
from .harness import (
    TariffTable,
    load_latency,
    load_trace,
    split_clients,
    synth_latency,
    synth_trace,
)
from .model import CostReport, DemandTrace, PowerModel, Schedule, SlaPolicy
from .routing import (
    RoutingProblem,
    RoutingSolution,
    baseline_demand_only,
    baseline_energy_only,
    route_closest,
    routing_objective,
    schedule_allocation,
)
from .scheduler import evaluate_schedule, power_series, schedule_horizon, schedule_random
from .subgradient import SubgradientOptions, subgradient_solve

__all__ = [
    "SolverNotConverged",
    "DatacenterSpec",
    "ExperimentConfig",
    "run_experiment",
    "SINGLE_DC_SCHEMES",
    "GEO_SCHEMES",
]

SINGLE_DC_SCHEMES = ("baseline", "random", "greedy", "best")
GEO_SCHEMES = ("baseline", "energy", "demand", "admm", "admm+alg1")


class SolverNotConverged(RuntimeError):
    """Iterative solver hit its iteration cap before the residual targets."""


@dataclass(frozen=True)
class DatacenterSpec:
    name: str
    servers: int
    tariff: str
    utc_offset_slots: int = 0


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description; serializes to manifest.json and
    reruns bit-for-bit from it."""

    scenario: str = "single-dc"  # single-dc | geo | convergence
    seed: int = 0
    slot_minutes: int = 15
    days: int = 1
    trace_file: Optional[str] = None
    trace: Dict = field(
        default_factory=lambda: {
            "base": 2.0e6,
            "amplitude": 1.4e6,
            "period_slots": 96,
            "noise_sd": 0.0,
        }
    )
    clients: int = 100
    client_split_sd: float = 0.3
    datacenters: List[DatacenterSpec] = field(
        default_factory=lambda: [DatacenterSpec("SC", 5000, "SC")]
    )
    latency_file: Optional[str] = None
    latency: Dict = field(
        default_factory=lambda: {"base_ms": 65.0, "spread_ms": 110.0, "dc_offset_step_ms": 8.0}
    )
    latency_bound_ms: float = 150.0
    sla: Dict = field(
        default_factory=lambda: {"percentile": 0.95, "high_quality": 0.99, "low_quality": 0.8}
    )
    power: Dict = field(
        default_factory=lambda: {"idle_w": 400.0, "peak_w": 750.0, "requests_per_server_slot": 900.0}
    )
    solver: Dict = field(
        default_factory=lambda: {"rho": 1.0, "max_iterations": 200, "eps_abs": 1e-6, "eps_rel": 1e-4}
    )
    subgradient: Dict = field(
        default_factory=lambda: {
            "initial_step": 1.0,
            "max_iterations": 600,
            "max_inner_sweeps": 1,
        }
    )
    out_dir: str = "out"

    @classmethod
    def default_geo(cls, scenario: str = "geo", seed: int = 0, out_dir: str = "out") -> "ExperimentConfig":
        """Desk-scale six-datacenter instance (I=100, J=6, T=96)."""
        # Ordered by ascending synthetic latency offset: the nearest
        # datacenters carry the highest demand prices, so latency-greedy
        # routing is expensive and price-aware routing has room to save.
        names = ["GA", "SC", "NC", "OK", "IA", "OR"]
        return cls(
            scenario=scenario,
            seed=seed,
            trace={"base": 450.0, "amplitude": 315.0, "period_slots": 96, "noise_sd": 10.0},
            datacenters=[
                DatacenterSpec(name, servers=2, tariff=name, utc_offset_slots=4 * k)
                for k, name in enumerate(names)
            ],
            # The bundled instance needs ~600 iterations at the default
            # tolerances; the convergence comparison uses a looser relative
            # tolerance to keep the side-by-side runs short.
            solver={
                "rho": 1.0,
                "max_iterations": 800,
                "eps_abs": 1e-6,
                "eps_rel": 1e-3 if scenario == "convergence" else 1e-4,
            },
            out_dir=out_dir,
        )

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentConfig":
        data = dict(data)
        data["datacenters"] = [DatacenterSpec(**dc) for dc in data.get("datacenters", [])]
        return cls(**data)

    # --- resolved model objects -------------------------------------------

    def sla_policy(self) -> SlaPolicy:
        return SlaPolicy(**self.sla)

    def power_model(self, servers: int) -> PowerModel:
        return PowerModel(servers=servers, **self.power)

    def base_trace(self) -> DemandTrace:
        if self.trace_file:
            return load_trace(self.trace_file, self.slot_minutes)
        return synth_trace(
            seed=self.seed, days=self.days, slot_minutes=self.slot_minutes, **self.trace
        )

    def routing_problem(self) -> RoutingProblem:
        """Aggregate demand is the sum of per-datacenter time-shifted copies of
        the base trace, then split among clients with seeded normal weights."""
        base = self.base_trace()
        total = np.zeros(len(base))
        for dc in self.datacenters:
            total += np.roll(base.demand, dc.utc_offset_slots)
        aggregate = DemandTrace(total, self.slot_minutes)
        demand = split_clients(aggregate, self.clients, self.client_split_sd, self.seed)
        if self.latency_file:
            latency = load_latency(self.latency_file)
        else:
            latency = synth_latency(
                self.clients, len(self.datacenters), seed=self.seed, **self.latency
            )
        table = TariffTable.bundled()
        return RoutingProblem(
            client_demand=demand,
            latency_ms=latency,
            latency_bound_ms=self.latency_bound_ms,
            tariffs=[table[dc.tariff] for dc in self.datacenters],
            power_models=[self.power_model(dc.servers) for dc in self.datacenters],
            sla=self.sla_policy(),
            slot_minutes=self.slot_minutes,
        )

    def admm_options(self) -> AdmmOptions:
        return AdmmOptions(**self.solver)

    def subgradient_options(self) -> SubgradientOptions:
        return SubgradientOptions(
            rho=self.solver["rho"],
            eps_abs=self.solver["eps_abs"],
            eps_rel=self.solver["eps_rel"],
            **self.subgradient,
        )


def _round9(value):
    """Clamp floats to 9 significant digits for stable serialized reports."""
    if isinstance(value, float):
        return float(f"{value:.9g}")
    if isinstance(value, dict):
        return {k: _round9(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round9(v) for v in value]
    return value


def _report_dict(report: CostReport) -> Dict:
    return {
        "peak_kw": report.peak_kw,
        "demand_charge_usd": report.demand_charge_usd,
        "energy_charge_usd": report.energy_charge_usd,
        "total_usd": report.total_usd,
        "sla_attainment": report.sla_attainment,
        "idle_kw": report.idle_kw,
    }


def _write_json(path, payload) -> None:
    with open(path, "w") as f:
        json.dump(_round9(payload), f, indent=2, sort_keys=True)
        f.write("\n")


def _write_power_series(path, series_by_scheme: Dict[str, Dict[str, np.ndarray]]) -> None:
    """Long-format CSV: scheme, datacenter, slot, power_kw."""
    with open(path, "w", newline="") as f:
        f.write("scheme,datacenter,slot,power_kw\n")
        for scheme in sorted(series_by_scheme):
            for dc in sorted(series_by_scheme[scheme]):
                for t, p in enumerate(series_by_scheme[scheme][dc]):
                    f.write(f"{scheme},{dc},{t},{p:.9g}\n")


def _write_convergence(path, logs: Dict[str, ConvergenceLog], include_wall: bool) -> None:
    with open(path, "w", newline="") as f:
        cols = "solver,iteration,primal_residual,dual_residual,objective"
        f.write(cols + (",wall_ms\n" if include_wall else "\n"))
        for solver in sorted(logs):
            log = logs[solver]
            for k in range(log.iterations()):
                row = (
                    f"{solver},{k + 1},{log.primal[k]:.9g},{log.dual[k]:.9g},"
                    f"{log.objective[k]:.9g}"
                )
                f.write(row + (f",{log.wall_ms[k]:.9g}\n" if include_wall else "\n"))


def _costs_payload(reports: Dict[str, CostReport]) -> Dict:
    payload = {name: _report_dict(r) for name, r in reports.items()}
    if "baseline" in reports and reports["baseline"].total_usd > 0:
        base = reports["baseline"].total_usd
        for name in payload:
            payload[name]["saving_vs_baseline"] = 1.0 - reports[name].total_usd / base
    return payload


def _run_single_dc(config: ExperimentConfig, schemes) -> Dict:
    if len(config.datacenters) != 1:
        raise ValueError("single-dc scenario requires exactly one datacenter")
    dc = config.datacenters[0]
    tariff = TariffTable.bundled()[dc.tariff]
    pm = config.power_model(dc.servers)
    policy = config.sla_policy()
    full = config.base_trace()
    period = int(config.trace["period_slots"]) if not config.trace_file else len(full) // max(config.days, 1)
    daily = [
        DemandTrace(full.demand[k : k + period], config.slot_minutes)
        for k in range(0, len(full), period)
    ]

    reports: Dict[str, CostReport] = {}
    series: Dict[str, Dict[str, np.ndarray]] = {}

    def record(name, schedule_modes):
        sched = Schedule(schedule_modes)
        reports[name] = evaluate_schedule(sched, full, policy, tariff, pm)
        series[name] = {dc.name: power_series(sched, full, policy, pm)}

    if "baseline" in schemes:
        record("baseline", np.ones(len(full), dtype=int))
    if "random" in schemes:
        modes = np.concatenate(
            [
                schedule_random(day, policy, tariff, pm, seed=config.seed + k).schedule.modes
                for k, day in enumerate(daily)
            ]
        )
        record("random", modes)
    if "greedy" in schemes:
        result = schedule_horizon(daily, policy, tariff, pm, mode="per-day")
        record("greedy", result.schedule.modes)
    if "best" in schemes:
        result = schedule_horizon(daily, policy, tariff, pm, mode="whole-horizon")
        record("best", result.schedule.modes)
    return {"reports": reports, "series": series, "logs": {}}


def _run_geo(config: ExperimentConfig, schemes) -> Dict:
    problem = config.routing_problem()
    options = config.admm_options()
    policy = config.sla_policy()
    reports: Dict[str, CostReport] = {}
    series: Dict[str, Dict[str, np.ndarray]] = {}
    logs: Dict[str, ConvergenceLog] = {}
    names = [dc.name for dc in config.datacenters]

    def record_allocation(name, solution: RoutingSolution):
        cost = routing_objective(solution, problem)
        reports[name] = cost.total
        load = solution.dc_load()
        a = problem.alpha_high
        series[name] = {
            names[j]: a
            * (problem.power_models[j].peak_w - problem.power_models[j].idle_w)
            / problem.power_models[j].requests_per_server_slot
            / 1000.0
            * load[j]
            for j in range(len(names))
        }

    admm_solution = None
    if {"admm", "admm+alg1"} & set(schemes):
        admm_solution, log = admm_solve(problem, options)
        logs["admm"] = log
        if not log.converged:
            raise SolverNotConverged("consensus routing solver hit its iteration cap")

    if "baseline" in schemes:
        record_allocation("baseline", route_closest(problem))
    if "energy" in schemes:
        record_allocation("energy", baseline_energy_only(problem, options))
    if "demand" in schemes:
        record_allocation("demand", baseline_demand_only(problem, options))
    if "admm" in schemes:
        record_allocation("admm", admm_solution)
    if "admm+alg1" in schemes:
        pipeline = schedule_allocation(admm_solution, problem)
        reports["admm+alg1"] = pipeline.total
        series["admm+alg1"] = {
            names[j]: power_series(
                s.schedule,
                DemandTrace(np.maximum(admm_solution.dc_load()[j], 0.0), config.slot_minutes),
                policy,
                problem.power_models[j],
            )
            for j, s in enumerate(pipeline.schedules)
        }
    return {"reports": reports, "series": series, "logs": logs}


def _run_convergence(config: ExperimentConfig) -> Dict:
    problem = config.routing_problem()
    admm_solution, admm_log = admm_solve(problem, config.admm_options())
    sub_solution, sub_log = subgradient_solve(problem, config.subgradient_options())
    reports = {
        "admm": routing_objective(admm_solution, problem).total,
        "subgradient": routing_objective(sub_solution, problem).total,
    }
    return {
        "reports": reports,
        "series": {},
        "logs": {"admm": admm_log, "subgradient": sub_log},
        "iterations": {"admm": admm_log.iterations(), "subgradient": sub_log.iterations()},
    }


def run_experiment(config: ExperimentConfig, schemes=None) -> Dict:
    """Execute the configured scenario and write the report files.

    Any failure removes partial outputs before re-raising with a stage tag.
    Returns the in-memory results (reports, per-scheme power series, logs).
    """
    os.makedirs(config.out_dir, exist_ok=True)
    written: List[str] = []

    def path(name):
        p = os.path.join(config.out_dir, name)
        written.append(p)
        return p

    try:
        if config.scenario == "single-dc":
            results = _run_single_dc(config, schemes or SINGLE_DC_SCHEMES)
        elif config.scenario == "geo":
            results = _run_geo(config, schemes or GEO_SCHEMES)
        elif config.scenario == "convergence":
            results = _run_convergence(config)
        else:
            raise ValueError(f"unknown scenario {config.scenario!r}")

        payload = _costs_payload(results["reports"])
        if "iterations" in results:
            payload["_iterations"] = results["iterations"]
        _write_json(path("costs.json"), payload)
        _write_power_series(path("power_series.csv"), results["series"])
        if results["logs"]:
            # Wall times are kept only for the convergence scenario; benchmark
            # comparisons stay byte-reproducible.
            _write_convergence(
                path("convergence.csv"),
                results["logs"],
                include_wall=config.scenario == "convergence",
            )
        _write_json(path("manifest.json"), config.to_dict())
        return results
    except Exception as exc:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        raise type(exc)(f"[scenario={config.scenario}] {exc}") from exc
