"""Consensus solver for the routing problem: alternating minimization over
the datacenter-side and client-side allocation copies with a dual update on
their coupling."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .routing import RoutingProblem, RoutingSolution
from .subproblems import per_user_batch, solve_per_dc

__all__ = [
    "AdmmOptions",
    "AdmmState",
    "ConvergenceLog",
    "augmented_lagrangian",
    "dual_update",
    "residuals",
    "admm_solve",
]


@dataclass(frozen=True)
class AdmmOptions:
    """Solver options.

    ``rho`` is a dimensionless multiplier on an automatically computed
    problem scale (marginal cost per cell-demand unit); the literal penalty
    used in the iterations is ``effective_rho``. This keeps the default of 1
    meaningful across instances whose demands span orders of magnitude.
    """

    rho: float = 1.0
    max_iterations: int = 200
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4

    def __post_init__(self):
        if self.rho <= 0 or self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("rho and tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def effective_rho(self, problem: RoutingProblem) -> float:
        """Penalty balancing the cost terms against the quadratic coupling."""
        positive = problem.client_demand[problem.client_demand > 0]
        if positive.size == 0:
            return self.rho
        coeff = float(
            np.mean(problem.demand_coeffs + problem.num_slots * problem.energy_coeffs)
        )
        scale = 2.5 * coeff / float(positive.mean())
        return self.rho * scale if scale > 0 else self.rho


@dataclass
class AdmmState:
    """Iterate state: datacenter copy d, client copy b, duals lam (all (I, J, T))."""

    d: np.ndarray
    b: np.ndarray
    lam: np.ndarray
    rho: float
    iteration: int = 0


@dataclass
class ConvergenceLog:
    primal: List[float] = field(default_factory=list)
    dual: List[float] = field(default_factory=list)
    objective: List[float] = field(default_factory=list)
    wall_ms: List[float] = field(default_factory=list)
    converged: bool = False

    def append(self, primal, dual, objective, wall_ms):
        self.primal.append(float(primal))
        self.dual.append(float(dual))
        self.objective.append(float(objective))
        self.wall_ms.append(float(wall_ms))

    def iterations(self) -> int:
        return len(self.primal)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("iteration,primal_residual,dual_residual,objective,wall_ms\n")
            for k in range(self.iterations()):
                f.write(
                    f"{k + 1},{self.primal[k]:.9g},{self.dual[k]:.9g},"
                    f"{self.objective[k]:.9g},{self.wall_ms[k]:.9g}\n"
                )


def augmented_lagrangian(state: AdmmState, problem: RoutingProblem) -> float:
    """Demand-charge term on d, energy term on b, plus the linear dual term and
    quadratic penalty on the coupling gap."""
    load = state.d.sum(axis=0)  # (J, T)
    demand_part = float(problem.demand_coeffs @ load.max(axis=1))
    energy_part = float(np.sum(problem.energy_coeffs[None, :, None] * state.b))
    gap = state.d - state.b
    coupling = float(np.sum(state.lam * gap) + 0.5 * state.rho * np.sum(gap * gap))
    return demand_part + energy_part + coupling


def dual_update(state: AdmmState) -> AdmmState:
    state.lam = state.lam + state.rho * (state.d - state.b)
    return state


def residuals(state: AdmmState, previous_b: np.ndarray) -> Tuple[float, float]:
    primal = float(np.linalg.norm(state.d - state.b))
    dual = float(state.rho * np.linalg.norm(state.b - previous_b))
    return primal, dual


def _b_step(state: AdmmState, problem: RoutingProblem) -> np.ndarray:
    """Solve all (client, slot) subproblems; exact on conservation + latency."""
    I, J, T = state.d.shape
    # Cells laid out as (I*T, J); demand and latency broadcast per cell.
    w = (
        state.rho * state.d + state.lam - problem.energy_coeffs[None, :, None]
    ).transpose(0, 2, 1).reshape(I * T, J)
    lat = np.repeat(problem.latency_ms, T, axis=0).reshape(I, T, J).reshape(I * T, J)
    dem = problem.client_demand.reshape(I * T)
    b = per_user_batch(w, lat, dem, problem.latency_bound_ms, state.rho)
    return b.reshape(I, T, J).transpose(0, 2, 1)


def _d_step(state: AdmmState, problem: RoutingProblem) -> np.ndarray:
    """Solve the J per-datacenter subproblems; exact on capacity."""
    caps = problem.capacities
    coeffs = problem.demand_coeffs
    d = np.empty_like(state.d)
    for j in range(d.shape[1]):
        d[:, j, :] = solve_per_dc(
            state.b[:, j, :], state.lam[:, j, :], state.rho, coeffs[j], caps[j]
        )
    return d


def restore_capacity(b: np.ndarray, problem: RoutingProblem) -> np.ndarray:
    """Move tiny residual over-capacity allocations to datacenters with slack.

    The client-side copy satisfies conservation and latency exactly but only
    approaches capacity through consensus; this best-effort pass shifts the
    leftover excess (on the order of the primal residual) to other reachable
    datacenters without breaking the other two constraint families.
    """
    caps = problem.capacities
    load = b.sum(axis=0)  # (J, T)
    over = list(zip(*np.nonzero(load > caps[:, None])))
    if not over:
        return b
    d = b.copy()
    L = problem.latency_ms
    bound = problem.latency_bound_ms
    for j, t in over:
        excess = load[j, t] - caps[j]
        for i in np.argsort(-d[:, j, t]):
            if excess <= 0:
                break
            avail = d[i, j, t]
            if avail <= 0:
                continue
            slack = bound * problem.client_demand[i, t] - float(d[i, :, t] @ L[i])
            for j2 in np.argsort(L[i], kind="stable"):
                if j2 == j or load[j2, t] >= caps[j2]:
                    continue
                move = min(avail, excess, caps[j2] - load[j2, t])
                delta_lat = L[i, j2] - L[i, j]
                if delta_lat > 0:
                    move = min(move, slack / delta_lat)
                if move <= 0:
                    continue
                d[i, j, t] -= move
                d[i, j2, t] += move
                load[j, t] -= move
                load[j2, t] += move
                slack -= delta_lat * move
                avail -= move
                excess -= move
                if excess <= 0:
                    break
    return d


def admm_solve(
    problem: RoutingProblem, options: Optional[AdmmOptions] = None
) -> Tuple[RoutingSolution, ConvergenceLog]:
    """Iterate datacenter-step, client-step, and dual update until the primal
    and dual residuals fall below the combined absolute/relative thresholds.

    Returns the client-side copy b as the solution (it satisfies conservation
    and latency exactly; capacity is re-checked by the caller's feasibility
    pass). On hitting the iteration cap the best iterate is returned with
    ``converged`` left False.
    """
    options = options or AdmmOptions()
    I, J, T = problem.num_clients, problem.num_datacenters, problem.num_slots
    shape = (I, J, T)
    state = AdmmState(
        d=np.zeros(shape),
        b=np.zeros(shape),
        lam=np.zeros(shape),
        rho=options.effective_rho(problem),
    )
    log = ConvergenceLog()
    sqrt_n = np.sqrt(I * J * T)
    t0 = time.perf_counter()
    for k in range(options.max_iterations):
        previous_b = state.b
        state.d = _d_step(state, problem)
        state.b = _b_step(state, problem)
        dual_update(state)
        state.iteration = k + 1
        primal, dual = residuals(state, previous_b)
        log.append(
            primal,
            dual,
            augmented_lagrangian(state, problem),
            (time.perf_counter() - t0) * 1e3,
        )
        eps_primal = sqrt_n * options.eps_abs + options.eps_rel * max(
            np.linalg.norm(state.d), np.linalg.norm(state.b)
        )
        eps_dual = sqrt_n * options.eps_abs + options.eps_rel * np.linalg.norm(state.lam)
        if primal <= eps_primal and dual <= eps_dual:
            log.converged = True
            break
    return RoutingSolution(restore_capacity(state.b, problem)), log
