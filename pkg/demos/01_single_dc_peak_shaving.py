"""Single-datacenter peak shaving with partial execution.

A diurnal workload is billed under a two-part tariff: a demand charge on the
monthly peak power and a volumetric energy charge. Serving a small fraction
of requests in a degraded low-quality mode - placed on the highest-demand
slots - cuts the peak, and the percentile SLA bounds how much demand may be
degraded. This script compares the all-high baseline, a random placement
benchmark, the greedy heuristic, and the brute-force optimum on one day.
"""

import numpy as np

from peakshave import (
    DEFAULT_TARIFFS,
    PowerModel,
    SlaPolicy,
    schedule_bruteforce,
    schedule_greedy,
    schedule_random,
    synth_trace,
)
from peakshave.scheduler import evaluate_schedule
from peakshave.model import Schedule

trace = synth_trace(base=2.0e6, amplitude=1.4e6, period_slots=96, noise_sd=2e4, seed=0)
policy = SlaPolicy(percentile=0.95, high_quality=0.99, low_quality=0.8)
tariff = DEFAULT_TARIFFS["SC"]
pm = PowerModel(servers=5000)

all_high = Schedule(np.ones(len(trace), dtype=int))
baseline = evaluate_schedule(all_high, trace, policy, tariff, pm)
random = schedule_random(trace, policy, tariff, pm, seed=0).cost
greedy = schedule_greedy(trace, policy, tariff, pm).cost

print(f"{'scheme':<10}{'peak kW':>12}{'demand $':>12}{'energy $':>12}{'total $':>12}{'saving':>9}")
rows = [("baseline", baseline), ("random", random), ("greedy", greedy)]
if len(trace) <= 20:  # brute force is exponential in the slot count
    rows.append(("best", schedule_bruteforce(trace, policy, tariff, pm).cost))
for name, cost in rows:
    saving = 1.0 - cost.total_usd / baseline.total_usd
    print(
        f"{name:<10}{cost.peak_kw:>12.1f}{cost.demand_charge_usd:>12.2f}"
        f"{cost.energy_charge_usd:>12.2f}{cost.total_usd:>12.2f}{saving:>8.1%}"
    )

ratio = greedy.peak_kw / baseline.peak_kw
print(f"\nGreedy trims the peak to {ratio:.2%} of the all-high peak. On a smooth")
print("diurnal curve the slots near the peak are nearly equal, so the 5% demand")
print("budget only shaves the very top; a workload with one dominant spike can")
print(f"reach the quality-target limit alpha_lo/alpha_hi = "
      f"{policy.alpha_low / policy.alpha_high:.1%}.")
