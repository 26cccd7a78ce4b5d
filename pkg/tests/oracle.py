"""Independent re-simulation of plan latency, used as a test oracle.

Structured deliberately unlike the production fold: each task expands into
explicit resource-bound stages (offload: send -> run -> return; local: run)
which are replayed in schedule order against generic resource timelines.
Kept free of any mrlco.sim scheduling code.
"""

from __future__ import annotations


def resimulate_plan(dag, order, plan, stage_times):
    """Latency of `plan` (aligned with `order`).

    stage_times[t] = dict with 't_ul', 't_s', 't_dl', 't_ue' durations (ms).
    Returns the max completion over exit tasks.
    """
    resource_free = {"ul": 0.0, "s": 0.0, "dl": 0.0, "ue": 0.0}
    finish = {t: {"ul": 0.0, "s": 0.0, "dl": 0.0, "ue": 0.0} for t in range(dag.n)}

    for pos, task in enumerate(order):
        durations = stage_times[task]
        parents = dag.parents(task)
        arrived_at_ue = max(
            [max(finish[q]["ue"], finish[q]["dl"]) for q in parents], default=0.0
        )
        if plan[pos] == 1:
            stages = [("ul", arrived_at_ue), ("s", None), ("dl", None)]
        else:
            stages = [("ue", arrived_at_ue)]
        prev_done = None
        for res, extra_wait in stages:
            earliest = resource_free[res]
            if extra_wait is not None:
                earliest = max(earliest, extra_wait)
            if prev_done is not None:
                earliest = max(earliest, prev_done)
            if res == "s":
                # a result computed on the host is already there for children
                on_host = max([finish[q]["s"] for q in parents], default=0.0)
                earliest = max(earliest, on_host)
            done = earliest + durations["t_" + res]
            finish[task][res] = done
            resource_free[res] = done
            prev_done = done

    exits = dag.exit_set
    return max(max(finish[k]["ue"], finish[k]["dl"]) for k in exits)
