"""Command-line front end.

Subcommands: schedule (single datacenter), route (geo routing solve),
compare (benchmark matrix), convergence (solver comparison), synth-trace,
synth-latency. Exit codes: 0 success, 1 validation error, 2 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiment import ExperimentConfig, SolverNotConverged, run_experiment
from .harness import save_latency, save_trace, synth_latency, synth_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NO_CONVERGENCE = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config JSON (a manifest.json reruns exactly)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--rho", type=float, help="override the solver penalty parameter")
    p.add_argument("--max-iter", type=int, help="override the solver iteration cap")
    p.add_argument("--eps-abs", type=float, help="override the absolute residual tolerance")
    p.add_argument("--eps-rel", type=float, help="override the relative residual tolerance")
    p.add_argument("--out", help="output directory")
    p.add_argument("--scheme", help="run only this scheme")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="peakshave",
        description="Datacenter electricity-cost simulator: partial-execution "
        "scheduling and geo-distributed request routing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("schedule", "schedule a single datacenter and report its bill"),
        ("route", "solve geo-distributed request routing with the consensus solver"),
        ("compare", "run the full benchmark matrix for the configured scenario"),
        ("convergence", "compare consensus and dual-subgradient solver convergence"),
    ]:
        _add_common(sub.add_parser(name, help=help_text))

    st = sub.add_parser("synth-trace", help="write a synthetic diurnal demand trace CSV")
    st.add_argument("--base", type=float, default=2.0e6)
    st.add_argument("--amplitude", type=float, default=1.4e6)
    st.add_argument("--period-slots", type=int, default=96)
    st.add_argument("--noise-sd", type=float, default=0.0)
    st.add_argument("--days", type=int, default=1)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--out", required=True, help="output CSV path")

    sl = sub.add_parser("synth-latency", help="write a synthetic latency matrix CSV")
    sl.add_argument("--clients", type=int, default=100)
    sl.add_argument("--datacenters", type=int, default=6)
    sl.add_argument("--base-ms", type=float, default=65.0)
    sl.add_argument("--spread-ms", type=float, default=110.0)
    sl.add_argument("--dc-offset-step-ms", type=float, default=8.0)
    sl.add_argument("--seed", type=int, default=0)
    sl.add_argument("--out", required=True, help="output CSV path")
    return parser


def _load_config(args, default_scenario: str) -> ExperimentConfig:
    if args.config:
        with open(args.config) as f:
            config = ExperimentConfig.from_dict(json.load(f))
    elif default_scenario == "single-dc":
        config = ExperimentConfig(scenario="single-dc", days=30)
    else:
        config = ExperimentConfig.default_geo(scenario=default_scenario)
    if args.seed is not None:
        config.seed = args.seed
    if args.rho is not None:
        config.solver["rho"] = args.rho
    if args.max_iter is not None:
        config.solver["max_iterations"] = args.max_iter
    if args.eps_abs is not None:
        config.solver["eps_abs"] = args.eps_abs
    if args.eps_rel is not None:
        config.solver["eps_rel"] = args.eps_rel
    if args.out:
        config.out_dir = args.out
    return config


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "synth-trace":
            trace = synth_trace(
                base=args.base,
                amplitude=args.amplitude,
                period_slots=args.period_slots,
                noise_sd=args.noise_sd,
                seed=args.seed,
                days=args.days,
            )
            save_trace(trace, args.out)
            print(f"wrote {len(trace)} slots to {args.out}")
            return EXIT_OK
        if args.command == "synth-latency":
            matrix = synth_latency(
                args.clients,
                args.datacenters,
                base_ms=args.base_ms,
                spread_ms=args.spread_ms,
                dc_offset_step_ms=args.dc_offset_step_ms,
                seed=args.seed,
            )
            save_latency(matrix, args.out)
            print(f"wrote {matrix.shape[0]}x{matrix.shape[1]} latency matrix to {args.out}")
            return EXIT_OK

        if args.command == "schedule":
            config = _load_config(args, "single-dc")
            schemes = (args.scheme,) if args.scheme else ("baseline", "greedy")
        elif args.command == "route":
            config = _load_config(args, "geo")
            schemes = (args.scheme,) if args.scheme else ("admm",)
        elif args.command == "compare":
            config = _load_config(args, "geo")
            schemes = (args.scheme,) if args.scheme else None
        else:  # convergence
            config = _load_config(args, "convergence")
            config.scenario = "convergence"
            schemes = None

        results = run_experiment(config, schemes)
        for name, report in sorted(results["reports"].items()):
            print(
                f"{name}: total ${report.total_usd:,.2f} "
                f"(demand ${report.demand_charge_usd:,.2f}, "
                f"energy ${report.energy_charge_usd:,.2f}, peak {report.peak_kw:.3f} kW)"
            )
        print(f"reports written to {config.out_dir}/")
        return EXIT_OK
    except SolverNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
