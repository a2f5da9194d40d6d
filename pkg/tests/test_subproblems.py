"""Subproblem solvers: hand-derived KKT cases plus convex-oracle checks."""

import numpy as np
import pytest

from peakshave import (
    Infeasible,
    SlotProjectionInput,
    UserProjectionInput,
    slot_projection,
    solve_per_dc,
    solve_per_user,
)
from peakshave.subproblems import per_user_batch

cp = pytest.importorskip("cvxpy")


class TestSlotProjection:
    def test_slack_capacity(self):
        inp = SlotProjectionInput(
            targets=np.array([1.0, 1.0]), duals=np.zeros(2), rho=1.0, cap=3.0
        )
        np.testing.assert_allclose(slot_projection(inp), [1.0, 1.0], atol=1e-12)

    def test_tight_capacity_waterfill(self):
        # KKT: nu = 0.25 splits the overflow evenly.
        inp = SlotProjectionInput(
            targets=np.array([1.0, 1.0]), duals=np.zeros(2), rho=1.0, cap=1.5
        )
        np.testing.assert_allclose(slot_projection(inp), [0.75, 0.75], atol=1e-10)

    def test_dual_thresholds_to_zero(self):
        inp = SlotProjectionInput(
            targets=np.array([1.0, 1.0]), duals=np.array([2.0, 0.0]), rho=1.0, cap=10.0
        )
        np.testing.assert_allclose(slot_projection(inp), [0.0, 1.0], atol=1e-12)

    def test_zero_capacity(self):
        inp = SlotProjectionInput(
            targets=np.array([1.0, 2.0]), duals=np.zeros(2), rho=1.0, cap=0.0
        )
        np.testing.assert_allclose(slot_projection(inp), [0.0, 0.0], atol=1e-12)

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(1, 6))
            b = rng.normal(0, 2, n)
            lam = rng.normal(0, 1, n)
            rho = float(rng.uniform(0.1, 5))
            cap = float(rng.uniform(0, 3))
            got = slot_projection(SlotProjectionInput(b, lam, rho, cap))
            d = cp.Variable(n, nonneg=True)
            obj = cp.Minimize(0.5 * rho * cp.sum_squares(d - b) + lam @ d)
            cp.Problem(obj, [cp.sum(d) <= cap]).solve(solver=cp.CLARABEL)
            f = lambda x: 0.5 * rho * np.sum((x - b) ** 2) + lam @ x
            assert np.sum(got) <= cap * (1 + 1e-9)
            assert np.all(got >= -1e-12)
            assert f(got) <= f(d.value) + 1e-6 * max(abs(f(d.value)), 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            SlotProjectionInput(np.ones(2), np.zeros(2), rho=0.0, cap=1.0)
        with pytest.raises(ValueError):
            SlotProjectionInput(np.ones(2), np.zeros(2), rho=1.0, cap=-1.0)


class TestPerUser:
    def _inp(self, anchors, duals, latencies=(10.0, 10.0), bound=150.0, energy=(0.0, 0.0)):
        return UserProjectionInput(
            anchors=np.asarray(anchors, dtype=float),
            duals=np.asarray(duals, dtype=float),
            energy_coeffs=np.asarray(energy, dtype=float),
            rho=1.0,
            demand=1.0,
            latencies=np.asarray(latencies, dtype=float),
            bound=bound,
        )

    def test_anchor_feasible(self):
        b = solve_per_user(self._inp((0.5, 0.5), (0.0, 0.0)))
        np.testing.assert_allclose(b, [0.5, 0.5], atol=1e-12)

    def test_dual_tilt(self):
        # KKT with slack latency: mu = 0, b = anchor + dual / rho.
        b = solve_per_user(self._inp((0.5, 0.5), (0.2, -0.2)))
        np.testing.assert_allclose(b, [0.7, 0.3], atol=1e-10)

    def test_latency_binding(self):
        # Hand KKT: eta = 0.05, mu = -0.1, allocation (0.75, 0.25) puts the
        # average latency exactly on the 1.5 ms bound.
        b = solve_per_user(self._inp((0.5, 0.5), (0.2, -0.2), latencies=(1.0, 3.0), bound=1.5))
        np.testing.assert_allclose(b, [0.75, 0.25], atol=1e-8)
        assert b @ np.array([1.0, 3.0]) == pytest.approx(1.5, abs=1e-8)

    def test_zero_demand_short_circuit(self):
        inp = UserProjectionInput(
            anchors=np.array([0.5, 0.5]),
            duals=np.zeros(2),
            energy_coeffs=np.zeros(2),
            rho=1.0,
            demand=0.0,
            latencies=np.array([1.0, 1.0]),
            bound=10.0,
        )
        np.testing.assert_allclose(solve_per_user(inp), [0.0, 0.0])

    def test_unreachable_raises(self):
        with pytest.raises(Infeasible):
            solve_per_user(self._inp((0.5, 0.5), (0.0, 0.0), latencies=(200.0, 300.0)))

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            J = int(rng.integers(1, 5))
            anchors = rng.normal(0, 1, J)
            duals = rng.normal(0, 0.5, J)
            energy = rng.uniform(0, 0.5, J)
            rho = float(rng.uniform(0.1, 5))
            demand = float(rng.uniform(0.1, 10))
            lat = rng.uniform(1, 100, J)
            lat[int(rng.integers(0, J))] = rng.uniform(1, 40)
            bound = float(rng.uniform(lat.min(), 120))
            inp = UserProjectionInput(anchors, duals, energy, rho, demand, lat, bound)
            got = solve_per_user(inp)
            b = cp.Variable(J, nonneg=True)
            obj = cp.Minimize(
                0.5 * rho * cp.sum_squares(b - anchors) + (energy - duals) @ b
            )
            cons = [cp.sum(b) == demand, lat @ b <= bound * demand]
            cp.Problem(obj, cons).solve(solver=cp.CLARABEL)
            f = lambda x: 0.5 * rho * np.sum((x - anchors) ** 2) + (energy - duals) @ x
            assert np.sum(got) == pytest.approx(demand, rel=1e-9)
            assert lat @ got <= bound * demand * (1 + 1e-8)
            assert f(got) <= f(b.value) + 1e-6 * max(abs(f(b.value)), 1.0)

    def test_batch_matches_scalar_path(self):
        rng = np.random.default_rng(2)
        J, m = 4, 30
        w = rng.normal(0, 1, (m, J))
        lat = rng.uniform(1, 100, (m, J))
        lat[:, 0] = rng.uniform(1, 40, m)
        demand = rng.uniform(0, 5, m)
        demand[::7] = 0.0
        batch = per_user_batch(w, lat, demand, 120.0, 1.0)
        for r in range(m):
            if demand[r] == 0:
                np.testing.assert_allclose(batch[r], 0.0)
                continue
            inp = UserProjectionInput(
                anchors=w[r],
                duals=np.zeros(J),
                energy_coeffs=np.zeros(J),
                rho=1.0,
                demand=float(demand[r]),
                latencies=lat[r],
                bound=120.0,
            )
            np.testing.assert_allclose(batch[r], solve_per_user(inp), atol=1e-8)


class TestPerDc:
    def test_zero_pull(self):
        d = solve_per_dc(np.zeros((1, 2)), np.zeros((1, 2)), rho=1.0, demand_coeff=1.0, cap=10.0)
        np.testing.assert_allclose(d, 0.0, atol=1e-12)

    def test_peak_pulls_down(self):
        # One client, two slots, b = (1, 2): the unit demand price flattens
        # the second slot down to the first; objective value 1.5.
        d = solve_per_dc(
            np.array([[1.0, 2.0]]), np.zeros((1, 2)), rho=1.0, demand_coeff=1.0, cap=10.0
        )
        np.testing.assert_allclose(d, [[1.0, 1.0]], atol=1e-7)
        obj = 1.0 * d.max() + 0.5 * np.sum((d - [[1.0, 2.0]]) ** 2)
        assert obj == pytest.approx(1.5, abs=1e-7)

    def test_zero_demand_coeff_closed_form(self):
        rng = np.random.default_rng(3)
        b = rng.normal(0, 1, (3, 4))
        lam = rng.normal(0, 1, (3, 4))
        d = solve_per_dc(b, lam, rho=2.0, demand_coeff=0.0, cap=100.0)
        np.testing.assert_allclose(d, np.maximum(b - lam / 2.0, 0.0), atol=1e-10)

    def test_capacity_clamps(self):
        d = solve_per_dc(
            np.array([[5.0, 5.0]]), np.zeros((1, 2)), rho=1.0, demand_coeff=0.0, cap=3.0
        )
        assert np.all(d.sum(axis=0) <= 3.0 + 1e-9)

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(4)
        for _ in range(40):
            I = int(rng.integers(1, 4))
            T = int(rng.integers(1, 4))
            b = rng.normal(0.5, 1, (I, T))
            lam = rng.normal(0, 0.3, (I, T))
            rho = float(rng.uniform(0.2, 3))
            c = float(rng.uniform(0, 2))
            cap = float(rng.uniform(0.5, 4))
            got = solve_per_dc(b, lam, rho, c, cap)
            d = cp.Variable((I, T), nonneg=True)
            obj = cp.Minimize(
                c * cp.max(cp.sum(d, axis=0))
                + 0.5 * rho * cp.sum_squares(d - b)
                + cp.sum(cp.multiply(lam, d))
            )
            cp.Problem(obj, [cp.sum(d, axis=0) <= cap]).solve(solver=cp.CLARABEL)
            f = lambda x: (
                c * x.sum(axis=0).max()
                + 0.5 * rho * np.sum((x - b) ** 2)
                + np.sum(lam * x)
            )
            assert np.all(got.sum(axis=0) <= cap * (1 + 1e-8))
            assert f(got) <= f(d.value) + 1e-6 * max(abs(f(d.value)), 1.0)
