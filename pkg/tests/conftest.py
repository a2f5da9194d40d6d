"""Shared fixtures: canonical model objects and small routing instances."""

import numpy as np
import pytest

from peakshave import (
    DemandTrace,
    PowerModel,
    RoutingProblem,
    SlaPolicy,
    Tariff,
)


@pytest.fixture(scope="session")
def sc_tariff():
    return Tariff("SC", demand_price_usd_per_kw=14.76, energy_price_usd_per_kwh=0.05037)


@pytest.fixture(scope="session")
def power_model():
    return PowerModel(idle_w=400.0, peak_w=750.0, servers=5000, requests_per_server_slot=900.0)


@pytest.fixture(scope="session")
def policy():
    return SlaPolicy(percentile=0.95, high_quality=0.99, low_quality=0.8)


def make_problem(
    demand,
    latency,
    bound=150.0,
    demand_prices=None,
    energy_prices=None,
    servers=None,
    slot_minutes=15,
    sla=None,
):
    """Build a RoutingProblem from plain arrays with sensible defaults."""
    demand = np.asarray(demand, dtype=float)
    latency = np.asarray(latency, dtype=float)
    J = latency.shape[1]
    if demand_prices is None:
        demand_prices = [10.0] * J
    if energy_prices is None:
        energy_prices = [0.05] * J
    if servers is None:
        servers = [max(1, int(np.ceil(demand.sum(axis=0).max() / 900.0)) + 1)] * J
    return RoutingProblem(
        client_demand=demand,
        latency_ms=latency,
        latency_bound_ms=bound,
        tariffs=[Tariff(f"T{j}", demand_prices[j], energy_prices[j]) for j in range(J)],
        power_models=[PowerModel(servers=servers[j]) for j in range(J)],
        sla=sla or SlaPolicy(),
        slot_minutes=slot_minutes,
    )


@pytest.fixture(scope="session")
def small_trace():
    return DemandTrace(np.array([10.0, 30.0, 20.0, 40.0]), slot_minutes=15)
