"""Dual-ascent reference solver: joint primal minimization at fixed duals,
then a diminishing-step subgradient update on the duals.

Used for convergence comparisons against the alternating-direction solver;
both share the subproblem solvers and the residual-based stopping rule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .admm import (
    AdmmOptions,
    AdmmState,
    ConvergenceLog,
    augmented_lagrangian,
    residuals,
    _b_step,
    _d_step,
)
from .routing import RoutingProblem, RoutingSolution

__all__ = ["SubgradientOptions", "subgradient_solve"]


@dataclass(frozen=True)
class SubgradientOptions:
    initial_step: float = 1.0
    max_iterations: int = 500
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    rho: float = 1.0  # penalty weight of the smoothed Lagrangian
    max_inner_sweeps: int = 50

    def __post_init__(self):
        if min(self.initial_step, self.eps_abs, self.eps_rel, self.rho) <= 0:
            raise ValueError("parameters must be positive")

    def step(self, k: int) -> float:
        """Diminishing rule: initial_step / k for outer iteration k >= 1."""
        return self.initial_step / k

    def effective_rho(self, problem: RoutingProblem) -> float:
        """Same automatic problem scaling as the consensus solver, so the two
        smoothed Lagrangians are directly comparable."""
        return AdmmOptions(
            rho=self.rho, eps_abs=self.eps_abs, eps_rel=self.eps_rel
        ).effective_rho(problem)


def subgradient_solve(
    problem: RoutingProblem, options: Optional[SubgradientOptions] = None
) -> Tuple[RoutingSolution, ConvergenceLog]:
    """Outer dual ascent with inner block-coordinate sweeps.

    At fixed duals the two allocation copies are swept alternately until the
    inner change falls below a tenth of the outer tolerance, approximating a
    joint minimization; the duals then move along the coupling gap with step
    initial_step / k.
    """
    options = options or SubgradientOptions()
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
    for k in range(1, options.max_iterations + 1):
        previous_b = state.b
        eps_dual = sqrt_n * options.eps_abs + options.eps_rel * np.linalg.norm(state.lam)
        for _ in range(options.max_inner_sweeps):
            b_sweep = state.b
            state.d = _d_step(state, problem)
            state.b = _b_step(state, problem)
            if state.rho * np.linalg.norm(state.b - b_sweep) <= 0.1 * eps_dual:
                break
        # Step sizes ride on the same scale as the penalty so that the first
        # outer update matches the consensus solver's dual step at default
        # settings.
        state.lam = state.lam + options.step(k) * state.rho * (state.d - state.b)
        state.iteration = k
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
        if primal <= eps_primal and dual <= eps_dual:
            log.converged = True
            break
    return RoutingSolution(state.b.copy()), log
