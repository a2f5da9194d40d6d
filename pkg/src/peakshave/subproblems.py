"""Exact closed-form solvers for the two alternating-minimization subproblems.

Both blocks reduce to threshold (water-filling) structures:

* the per-datacenter block is a peak-cost-plus-quadratic problem solved by an
  epigraph variable on the peak and a capped nonnegative projection per slot;
* the per-client block is a quadratic projection onto the demand-conservation
  simplex with an average-latency inequality, solved by nested thresholds.

All functions are stateless and safe to run in parallel across instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Infeasible",
    "SlotProjectionInput",
    "UserProjectionInput",
    "slot_projection",
    "solve_per_user",
    "solve_per_dc",
]

LATENCY_EQ_RTOL = 1e-10
PEAK_BISECT_RTOL = 1e-9


class Infeasible(ValueError):
    """No allocation satisfies the constraint set."""


@dataclass(frozen=True)
class SlotProjectionInput:
    """One slot of the per-datacenter block: targets, duals, penalty, capacity."""

    targets: np.ndarray  # per-client anchor values b_i
    duals: np.ndarray  # per-client duals lambda_i
    rho: float
    cap: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.cap < 0:
            raise ValueError("cap must be non-negative")


@dataclass(frozen=True)
class UserProjectionInput:
    """One (client, slot) cell of the per-client block."""

    anchors: np.ndarray  # per-datacenter anchor values d_j
    duals: np.ndarray  # per-datacenter duals lambda_j
    energy_coeffs: np.ndarray  # $/request marginal energy cost per datacenter
    rho: float
    demand: float
    latencies: np.ndarray  # ms, per datacenter
    bound: float  # ms, average-latency cap

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.demand < 0:
            raise ValueError("demand must be non-negative")


def _capped_projection(z: np.ndarray, rho: float, caps: np.ndarray):
    """Columnwise solve of min sum (rho/2) d^2 - z d  s.t. d >= 0, sum d <= cap.

    ``z`` is (n, m) with one column per independent problem, ``caps`` is (m,).
    Returns (d, nu) where nu is the capacity multiplier per column (the exact
    threshold; zero when the capacity is slack). Sort-based and exact up to
    float arithmetic.
    """
    n, m = z.shape
    caps = np.asarray(caps, dtype=float)
    d_free = np.maximum(z, 0.0) / rho
    nu = np.zeros(m)
    tight = d_free.sum(axis=0) > caps * (1 + 1e-15)
    if np.any(tight):
        zt = z[:, tight]
        ct = rho * caps[tight]
        zs = -np.sort(-zt, axis=0)  # descending
        css = np.cumsum(zs, axis=0)
        ks = np.arange(1, n + 1)[:, None]
        nu_k = (css - ct[None, :]) / ks
        valid = zs > nu_k
        k_star = valid.sum(axis=0)  # prefix property of the threshold test
        nut = np.where(
            k_star > 0,
            np.take_along_axis(nu_k, np.maximum(k_star - 1, 0)[None, :], axis=0)[0],
            np.maximum(zs[0], 0.0),  # cap == 0 with positive pull: everything clips to 0
        )
        nut = np.maximum(nut, 0.0)
        nu[tight] = nut
        d_free[:, tight] = np.maximum(zt - nut[None, :], 0.0) / rho
    return d_free, nu


def _equality_waterfill(z: np.ndarray, rho: float, totals: np.ndarray):
    """Rowwise solve of min sum (rho/2) b^2 - z b  s.t. b >= 0, sum b = total.

    ``z`` is (m, J); ``totals`` (m,) must be positive. Returns (b, mu) with
    mu the (sign-free) equality multiplier per row.
    """
    m, J = z.shape
    zs = -np.sort(-z, axis=1)
    css = np.cumsum(zs, axis=1)
    ks = np.arange(1, J + 1)[None, :]
    mu_k = (css - rho * totals[:, None]) / ks
    valid = zs > mu_k
    k_star = valid.sum(axis=1)  # >= 1 whenever total > 0
    mu = np.take_along_axis(mu_k, (k_star - 1)[:, None], axis=1)[:, 0]
    b = np.maximum(z - mu[:, None], 0.0) / rho
    return b, mu


def per_user_batch(
    w: np.ndarray,
    latencies: np.ndarray,
    demand: np.ndarray,
    bound: float,
    rho: float,
    bisect_iters: int = 40,
):
    """Solve every per-(client, slot) subproblem at once.

    ``w`` (m, J) collects rho*anchor + dual - energy_coeff per cell; rows with
    zero demand short-circuit to zero. Each row minimizes
    sum_j (rho/2) b_j^2 - w_j b_j subject to sum b = demand, b >= 0, and
    sum b_j L_j <= bound * demand.
    """
    m, J = w.shape
    demand = np.asarray(demand, dtype=float)
    b = np.zeros((m, J))
    active = demand > 0
    if not np.any(active):
        return b
    wa, la, da = w[active], latencies[active], demand[active]
    lmin = la.min(axis=1)
    if np.any(lmin > bound * (1 + 1e-12)):
        raise Infeasible("some client cannot reach any datacenter within the latency bound")

    ba, _ = _equality_waterfill(wa, rho, da)
    lat = (ba * la).sum(axis=1)
    target = bound * da
    viol = lat > target * (1 + 1e-12)

    if np.any(viol):
        wv, lv, dv = wa[viol], la[viol], da[viol]
        tv = target[viol]
        # Rows whose best achievable latency equals the bound: take the limit
        # allocation restricted to the nearest datacenters.
        degen = lv.min(axis=1) >= bound * (1 - 1e-12)
        if np.any(degen):
            wd = np.where(lv[degen] <= bound * (1 + 1e-12), wv[degen], -np.inf)
            bd, _ = _equality_waterfill(np.where(np.isfinite(wd), wd, -1e30), rho, dv[degen])
            bv_part = np.zeros_like(wv)
            bv_part[degen] = bd
            reg = ~degen
        else:
            bv_part = np.zeros_like(wv)
            reg = np.ones(len(wv), dtype=bool)
        if np.any(reg):
            wr, lr, dr, tr = wv[reg], lv[reg], dv[reg], tv[reg]
            lo = np.zeros(len(wr))
            hi = np.maximum(np.abs(wr).max(axis=1) / rho, 1.0)
            for _ in range(64):  # grow until the latency cap holds everywhere
                br, _ = _equality_waterfill(wr - hi[:, None] * lr, rho, dr)
                still = (br * lr).sum(axis=1) > tr * (1 + 1e-14)
                if not np.any(still):
                    break
                hi = np.where(still, hi * 2.0, hi)
            for _ in range(bisect_iters):
                mid = 0.5 * (lo + hi)
                br, _ = _equality_waterfill(wr - mid[:, None] * lr, rho, dr)
                over = (br * lr).sum(axis=1) > tr
                lo = np.where(over, mid, lo)
                hi = np.where(over, hi, mid)
            br, _ = _equality_waterfill(wr - hi[:, None] * lr, rho, dr)
            bv_part[reg] = br
        ba[viol] = bv_part
    b[active] = ba
    return b


def slot_projection(inp: SlotProjectionInput) -> np.ndarray:
    """Minimize sum_i (rho/2)(d_i - b_i)^2 + lambda_i d_i over d >= 0, sum d <= cap."""
    b = np.asarray(inp.targets, dtype=float)
    lam = np.asarray(inp.duals, dtype=float)
    z = (inp.rho * b - lam)[:, None]
    d, _ = _capped_projection(z, inp.rho, np.array([inp.cap]))
    return d[:, 0]


def solve_per_user(inp: UserProjectionInput) -> np.ndarray:
    """Minimize sum_j (rho/2)(b_j - d_j)^2 + (e_j - lambda_j) b_j over the
    conservation simplex with the average-latency cap."""
    if inp.demand == 0:
        return np.zeros(len(np.asarray(inp.anchors)))
    w = (
        inp.rho * np.asarray(inp.anchors, dtype=float)
        + np.asarray(inp.duals, dtype=float)
        - np.asarray(inp.energy_coeffs, dtype=float)
    )
    b = per_user_batch(
        w[None, :],
        np.asarray(inp.latencies, dtype=float)[None, :],
        np.array([inp.demand]),
        inp.bound,
        inp.rho,
    )
    return b[0]


def solve_per_dc(
    b_prev: np.ndarray,
    duals: np.ndarray,
    rho: float,
    demand_coeff: float,
    cap: float,
    m_bisect_iters: int = 80,
):
    """Minimize demand_coeff * max_t(sum_i d[:, t]) plus the quadratic/linear
    penalty terms, over d >= 0 with per-slot capacity ``cap``.

    The peak enters through an epigraph scalar m: for fixed m every slot is an
    independent capped projection, and the outer one-dimensional convex
    problem in m is solved by bisection on its subgradient (the demand price
    against the sum of slot capacity multipliers).
    """
    b_prev = np.atleast_2d(np.asarray(b_prev, dtype=float))
    duals = np.atleast_2d(np.asarray(duals, dtype=float))
    z = rho * b_prev - duals  # (I, T)
    I, T = z.shape

    # The slot capacity multiplier has the closed form
    # nu_t(C) = max(0, max_k (css_k - C) / k) with css the descending cumsum
    # of z; sorting once here makes each bisection step a cheap matrix max.
    css = np.cumsum(-np.sort(-z, axis=0), axis=0)  # (I, T)
    inv_k = 1.0 / np.arange(1, I + 1)[:, None]

    def grad(m):
        nu = np.max((css - rho * min(m, cap)) * inv_k, axis=0)
        return demand_coeff - float(np.maximum(nu, 0.0).sum())

    if grad(cap) <= 0:
        m_star = cap
    elif grad(0.0) >= 0:
        m_star = 0.0
    else:
        lo, hi = 0.0, cap
        for _ in range(m_bisect_iters):
            mid = 0.5 * (lo + hi)
            if grad(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= PEAK_BISECT_RTOL * cap:
                break
        m_star = 0.5 * (lo + hi)
    d, _ = _capped_projection(z, rho, np.full(T, min(m_star, cap)))
    return d
