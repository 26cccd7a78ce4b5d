"""Compare the reference schedulers on a batch of generated DAGs.

Generates 20 random 12-task DAGs and reports average latency for all-local,
all-offload, greedy (index order), HEFT (rank order), and the exhaustive
optimal plan.
"""

import numpy as np

from mrlco.baselines import (
    all_local_plan,
    all_offload_plan,
    greedy_schedule,
    heft_schedule,
    optimal_schedule,
    plan_latency,
)
from mrlco.dag import GeneratorConfig, compute_rank, generate_dataset
from mrlco.sim import SystemParams

params = SystemParams(f_ue=1e9, f_host=4e10, user_count=4, r_ul=1e7, r_dl=1e7)
config = GeneratorConfig(n=12, fat=0.6, density=0.6, seed=42)
dags = [compute_rank(d, params) for d in generate_dataset(config, 20)]

results: dict[str, list[float]] = {}
for ranked in dags:
    plans = {
        "all-local": all_local_plan(ranked.n),
        "all-offload": all_offload_plan(ranked.n),
        "greedy": greedy_schedule(ranked, params),
        "heft": heft_schedule(ranked, params),
        "optimal": optimal_schedule(ranked, params)[0],
    }
    for name, plan in plans.items():
        results.setdefault(name, []).append(plan_latency(ranked, plan, params))

opt = np.mean(results["optimal"])
print(f"average latency over {len(dags)} DAGs (n={config.n}):")
for name, values in sorted(results.items(), key=lambda kv: np.mean(kv[1])):
    avg = np.mean(values)
    print(f"  {name:12s} {avg:8.2f} ms   ({avg / opt:5.3f}x optimal)")
