"""MEC latency model and the episodic offloading environment.

Four serial resources are modeled: uplink channel, MEC host (one VM),
downlink channel, and the UE CPU. Scheduling a task in plan order either
runs it locally (UE only) or offloads it (uplink -> host -> downlink),
each stage waiting for its resource and the task's parents. All times are
double precision milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dag import DagApp, RankedDag, TaskProfile
from .errors import ConfigError, ProtocolError

MS = 1e3  # seconds -> milliseconds


@dataclass(frozen=True)
class SystemParams:
    """Device/host/channel capacities. Rates in bits/s, speeds in cycles/s."""

    f_ue: float
    f_host: float
    user_count: int
    r_ul: float
    r_dl: float

    def __post_init__(self):
        if min(self.f_ue, self.f_host, self.r_ul, self.r_dl) <= 0 or self.user_count < 1:
            raise ConfigError(f"system parameters must be positive: {self}")

    @property
    def f_vm(self) -> float:
        """Per-VM capacity under equal resource allocation."""
        return self.f_host / self.user_count


@dataclass(frozen=True)
class TaskLatencies:
    """Stage latencies of one task in ms; t_offload_total = ul + host + dl."""

    t_ul: float
    t_s: float
    t_dl: float
    t_ue: float

    @property
    def t_offload_total(self) -> float:
        return self.t_ul + self.t_s + self.t_dl


def task_latencies(profile: TaskProfile, params: SystemParams) -> TaskLatencies:
    return TaskLatencies(
        t_ul=profile.data_send * 8.0 / params.r_ul * MS,
        t_s=profile.cycles / params.f_vm * MS,
        t_dl=profile.data_recv * 8.0 / params.r_dl * MS,
        t_ue=profile.cycles / params.f_ue * MS,
    )


@dataclass(frozen=True)
class ScheduleState:
    """Rolling schedule state: resource available times and task finish times.

    Finish times are indexed by original task index and stay 0 for
    unscheduled tasks and for resources a task did not use.
    """

    avail_ul: float
    avail_s: float
    avail_dl: float
    avail_ue: float
    ft_ul: np.ndarray
    ft_s: np.ndarray
    ft_dl: np.ndarray
    ft_ue: np.ndarray
    cursor: int
    plan_so_far: tuple[int, ...]

    @staticmethod
    def initial(n: int) -> "ScheduleState":
        zeros = lambda: np.zeros(n)
        return ScheduleState(0.0, 0.0, 0.0, 0.0, zeros(), zeros(), zeros(), zeros(), 0, ())


def advance(state: ScheduleState, ranked: RankedDag, params: SystemParams,
            action: int) -> ScheduleState:
    """Schedule the next task in rank order with the given decision.

    Offload: uplink waits for the channel and for every parent's completion
    on the UE side (local finish or downlink arrival); the host additionally
    waits for parents that ran on the host (result already resident); the
    downlink follows the host. Local: the UE waits for the UE queue and the
    parents' UE-side completion.
    """
    if state.cursor >= ranked.n:
        raise ProtocolError("advance called on a completed plan")
    task = ranked.order[state.cursor]
    lat = task_latencies(ranked.dag.tasks[task], params)
    parents = ranked.dag.parents(task)
    parent_ready = max((max(state.ft_ue[j], state.ft_dl[j]) for j in parents), default=0.0)

    ft_ul = state.ft_ul.copy()
    ft_s = state.ft_s.copy()
    ft_dl = state.ft_dl.copy()
    ft_ue = state.ft_ue.copy()
    if action == 1:
        parent_on_host = max((state.ft_s[j] for j in parents), default=0.0)
        ft_ul[task] = max(state.avail_ul, parent_ready) + lat.t_ul
        ft_s[task] = max(state.avail_s, ft_ul[task], parent_on_host) + lat.t_s
        ft_dl[task] = max(state.avail_dl, ft_s[task]) + lat.t_dl
        new = replace(
            state,
            avail_ul=ft_ul[task], avail_s=ft_s[task], avail_dl=ft_dl[task],
            ft_ul=ft_ul, ft_s=ft_s, ft_dl=ft_dl,
        )
    elif action == 0:
        ft_ue[task] = max(state.avail_ue, parent_ready) + lat.t_ue
        new = replace(state, avail_ue=ft_ue[task], ft_ue=ft_ue)
    else:
        raise ProtocolError(f"action must be 0 or 1, got {action!r}")
    return replace(new, cursor=state.cursor + 1,
                   plan_so_far=state.plan_so_far + (int(action),))


def partial_latency(state: ScheduleState) -> float:
    """Makespan of the tasks scheduled so far (0 before the first task)."""
    if state.cursor == 0:
        return 0.0
    return float(max(state.ft_ue.max(), state.ft_dl.max()))


def total_latency(state: ScheduleState, dag: DagApp) -> float:
    """Latency of a complete plan: max over exit tasks of UE/downlink finish."""
    if state.cursor != dag.n:
        raise ProtocolError(f"plan incomplete: {state.cursor} of {dag.n} tasks scheduled")
    exits = sorted(dag.exit_set)
    return float(max(max(state.ft_ue[k], state.ft_dl[k]) for k in exits))


def evaluate_plan(ranked: RankedDag, plan, params: SystemParams) -> float:
    """Total latency of a rank-order decision sequence."""
    plan = list(plan)
    if len(plan) != ranked.n:
        raise ProtocolError(f"plan length {len(plan)} != task count {ranked.n}")
    state = ScheduleState.initial(ranked.n)
    for a in plan:
        state = advance(state, ranked, params, a)
    return total_latency(state, ranked.dag)


def mean_local_latency(dag: DagApp, params: SystemParams) -> float:
    """Mean per-task local run time; the default reward scale."""
    return float(np.mean([task_latencies(t, params).t_ue for t in dag.tasks]))


@dataclass(frozen=True)
class EnvStep:
    """One environment transition: observation, reward, done flag."""

    observation: tuple[np.ndarray, tuple[int, ...]]
    reward: float
    done: bool


class OffloadEnv:
    """Episodic MDP wrapper: one episode schedules one DAG task by task.

    The observation is (task embedding sequence, partial plan); the reward
    is the negative makespan increment, divided by the DAG's mean local
    task latency unless ``normalize_reward`` is off.
    """

    def __init__(self, ranked: RankedDag, embeddings: np.ndarray,
                 params: SystemParams, normalize_reward: bool = True):
        self.ranked = ranked
        self.embeddings = embeddings
        self.params = params
        self.scale = mean_local_latency(ranked.dag, params) if normalize_reward else 1.0
        self._state: ScheduleState | None = None
        self._prev_latency = 0.0

    def reset(self) -> EnvStep:
        self._state = ScheduleState.initial(self.ranked.n)
        self._prev_latency = 0.0
        return EnvStep(observation=(self.embeddings, ()), reward=0.0, done=False)

    def step(self, action: int) -> EnvStep:
        if self._state is None:
            raise ProtocolError("step before reset")
        if self._state.cursor >= self.ranked.n:
            raise ProtocolError("step after episode end")
        self._state = advance(self._state, self.ranked, self.params, action)
        latency = partial_latency(self._state)
        reward = -(latency - self._prev_latency) / self.scale
        self._prev_latency = latency
        done = self._state.cursor == self.ranked.n
        return EnvStep(
            observation=(self.embeddings, self._state.plan_so_far),
            reward=reward,
            done=done,
        )

    @property
    def final_latency(self) -> float:
        return total_latency(self._state, self.ranked.dag)
