"""Walk through the latency model on a hand-built four-task diamond DAG.

Shows per-task stage latencies, evaluates a few offloading plans, and
prints the full schedule state after the best of them.
"""

import numpy as np

from mrlco.dag import DagApp, TaskProfile, compute_rank
from mrlco.sim import (
    ScheduleState,
    SystemParams,
    advance,
    evaluate_plan,
    task_latencies,
)

params = SystemParams(f_ue=1e9, f_host=4e10, user_count=4, r_ul=1e7, r_dl=1e7)

dag = DagApp(
    tasks=(
        TaskProfile(cycles=3e7, data_send=1.0e4, data_recv=1.0e4),
        TaskProfile(cycles=8e7, data_send=2.5e4, data_recv=2.5e4),
        TaskProfile(cycles=5e7, data_send=1.5e4, data_recv=1.5e4),
        TaskProfile(cycles=4e7, data_send=2.0e4, data_recv=2.0e4),
    ),
    edges=((0, 1), (0, 2), (1, 3), (2, 3)),
)

print("per-task latencies (ms):")
for i, profile in enumerate(dag.tasks):
    lat = task_latencies(profile, params)
    print(f"  task {i}: local {lat.t_ue:6.2f}   offload "
          f"{lat.t_ul:.2f} + {lat.t_s:.2f} + {lat.t_dl:.2f} = {lat.t_offload_total:6.2f}")

ranked = compute_rank(dag, params)
print(f"\nrank order: {ranked.order} (ranks {np.round(ranked.rank, 2)})")

plans = {
    "all local": [0, 0, 0, 0],
    "all offload": [1, 1, 1, 1],
    "mixed": [1, 0, 1, 0],
}
best = min(plans, key=lambda k: evaluate_plan(ranked, plans[k], params))
for name, plan in plans.items():
    lat = evaluate_plan(ranked, plan, params)
    marker = "  <- best of these" if name == best else ""
    print(f"  {name:12s} {plan} -> {lat:7.2f} ms{marker}")

print(f"\nschedule trace for the {best!r} plan:")
state = ScheduleState.initial(dag.n)
for action in plans[best]:
    task = ranked.order[state.cursor]
    state = advance(state, ranked, params, action)
    side = "offload" if action else "local"
    finish = max(state.ft_ue[task], state.ft_dl[task])
    print(f"  task {task} -> {side:7s} finishes at {finish:7.2f} ms")
