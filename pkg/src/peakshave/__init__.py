"""Datacenter electricity-cost optimization under two-part tariffs:
partial-execution scheduling for a single datacenter and distributed
consensus request routing for geo-distributed fleets."""

from .admm import AdmmOptions, AdmmState, ConvergenceLog, admm_solve, augmented_lagrangian
from .harness import (
    DEFAULT_TARIFFS,
    GapError,
    NonPositiveLatency,
    ParseError,
    TariffTable,
    load_latency,
    load_trace,
    split_clients,
    synth_latency,
    synth_trace,
)
from .model import (
    CapacityExceeded,
    CostReport,
    DemandTrace,
    OutOfRange,
    PowerModel,
    QualityProfile,
    Schedule,
    SlaPolicy,
    SlaViolated,
    Tariff,
    billing_cost,
    dynamic_power_kw,
    quality,
    quality_inverse,
    sla_satisfied,
    utilization,
)
from .routing import (
    PipelineResult,
    RoutingCost,
    RoutingProblem,
    RoutingSolution,
    baseline_demand_only,
    baseline_energy_only,
    check_feasible,
    route_closest,
    routing_objective,
    schedule_allocation,
    solve_pipeline,
)
from .scheduler import (
    ScheduleResult,
    TooLarge,
    evaluate_schedule,
    schedule_bruteforce,
    schedule_greedy,
    schedule_horizon,
    schedule_random,
)
from .subgradient import SubgradientOptions, subgradient_solve
from .subproblems import (
    Infeasible,
    SlotProjectionInput,
    UserProjectionInput,
    slot_projection,
    solve_per_dc,
    solve_per_user,
)
from .experiment import DatacenterSpec, ExperimentConfig, SolverNotConverged, run_experiment

__version__ = "0.1.0"
