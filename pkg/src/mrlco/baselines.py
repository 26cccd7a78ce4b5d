"""Deterministic reference schedulers: HEFT-based, greedy, exhaustive optimal."""

from __future__ import annotations

import numpy as np

from .dag import RankedDag
from .errors import CapacityError, ProtocolError
from .sim import ScheduleState, SystemParams, advance, evaluate_plan, task_latencies

OPTIMAL_DEFAULT_LIMIT = 20


def _commit_earliest_finish(ranked: RankedDag, order, params: SystemParams):
    """Walk `order`, committing each task to whichever side finishes it first.

    A task's own finish is its downlink finish when offloaded and its UE
    finish when local; ties prefer local. Returns decisions aligned with
    `order`.
    """
    state = ScheduleState.initial(ranked.n)
    decisions = []
    for _ in order:
        task = ranked.order[state.cursor]
        local = advance(state, ranked, params, 0)
        remote = advance(state, ranked, params, 1)
        if remote.ft_dl[task] < local.ft_ue[task]:
            state, a = remote, 1
        else:
            state, a = local, 0
        decisions.append(a)
    return decisions


def heft_schedule(ranked: RankedDag, params: SystemParams) -> list[int]:
    """Earliest-finish commitment in descending-rank order."""
    return _commit_earliest_finish(ranked, ranked.order, params)


def greedy_schedule(ranked: RankedDag, params: SystemParams) -> list[int]:
    """Earliest-finish commitment in original task-index order.

    The original order must already be topological (the generator emits
    parents before children). The result is re-expressed in rank order so
    it can be fed to evaluate_plan like every other plan.
    """
    dag = ranked.dag
    original = list(range(dag.n))
    for u, v in dag.edges:
        if u > v:
            raise ProtocolError("original index order is not topological")

    # Reuse the plan-order scheduler with a rank ordering equal to the
    # original index order; the recurrences only need parents-first.
    by_index = RankedDag(dag=dag, rank=ranked.rank, order=tuple(original))
    decisions = _commit_earliest_finish(by_index, original, params)
    by_task = {t: a for t, a in zip(original, decisions)}
    return [by_task[t] for t in ranked.order]


def optimal_schedule(ranked: RankedDag, params: SystemParams,
                     limit: int = OPTIMAL_DEFAULT_LIMIT) -> tuple[list[int], float]:
    """Exhaustive minimum over all 2^n rank-order plans.

    Ties go to the lexicographically smallest plan (local preferred). The
    enumeration is vectorized over chunks of plans; n is capped to keep the
    runtime bounded.
    """
    n = ranked.n
    if n > limit:
        raise CapacityError(f"optimal_schedule capped at n <= {limit}, got {n}")

    dag = ranked.dag
    lats = [task_latencies(dag.tasks[t], params) for t in ranked.order]
    parents_pos = []
    pos = ranked.rank_index()
    for t in ranked.order:
        parents_pos.append([pos[q] for q in dag.parents(t)])
    exit_pos = [pos[k] for k in sorted(dag.exit_set)]

    total = 1 << n
    chunk = min(total, 1 << 16)
    best_lat = np.inf
    best_idx = -1
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        m = idx.size
        # Decision of rank-position i is bit (n-1-i), so numeric plan index
        # order equals lexicographic plan order.
        ft_ul = np.zeros((m, n))
        ft_s = np.zeros((m, n))
        ft_dl = np.zeros((m, n))
        ft_ue = np.zeros((m, n))
        avail_ul = np.zeros(m)
        avail_s = np.zeros(m)
        avail_dl = np.zeros(m)
        avail_ue = np.zeros(m)
        for i in range(n):
            off = ((idx >> (n - 1 - i)) & 1).astype(bool)
            loc = ~off
            if parents_pos[i]:
                pp = parents_pos[i]
                ready = np.maximum(ft_ue[:, pp], ft_dl[:, pp]).max(axis=1)
                on_host = ft_s[:, pp].max(axis=1)
            else:
                ready = np.zeros(m)
                on_host = np.zeros(m)
            lat = lats[i]
            ul = np.maximum(avail_ul, ready) + lat.t_ul
            s = np.maximum(avail_s, np.maximum(ul, on_host)) + lat.t_s
            dl = np.maximum(avail_dl, s) + lat.t_dl
            ue = np.maximum(avail_ue, ready) + lat.t_ue
            ft_ul[off, i] = ul[off]
            ft_s[off, i] = s[off]
            ft_dl[off, i] = dl[off]
            ft_ue[loc, i] = ue[loc]
            avail_ul[off] = ul[off]
            avail_s[off] = s[off]
            avail_dl[off] = dl[off]
            avail_ue[loc] = ue[loc]
        lat_all = np.maximum(ft_ue[:, exit_pos], ft_dl[:, exit_pos]).max(axis=1)
        k = int(np.argmin(lat_all))
        if lat_all[k] < best_lat:
            best_lat = float(lat_all[k])
            best_idx = int(idx[k])

    plan = [(best_idx >> (n - 1 - i)) & 1 for i in range(n)]
    return plan, best_lat


def all_local_plan(n: int) -> list[int]:
    return [0] * n


def all_offload_plan(n: int) -> list[int]:
    return [1] * n


def plan_latency(ranked: RankedDag, plan, params: SystemParams) -> float:
    return evaluate_plan(ranked, plan, params)
