"""Outer-loop meta-training with the first-order meta-gradient, plus
test-time adaptation and the fine-tuned-pretrain baseline.

Each outer iteration samples a batch of learning tasks, runs an independent
inner update on every task from the same meta parameters, averages the
parameter displacements into a meta-gradient, and applies one Adam ascent
step. Adaptation reuses the inner update machinery starting from the meta
parameters.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dag import RankedDag
from .errors import ConfigError
from .net import AdamState, NetConfig, PolicyParams, adam_step
from .ppo import HyperParams, evaluate_policy, inner_update
from .sim import SystemParams


@dataclass
class LearningTask:
    """One MDP: a dataset of ranked DAGs plus one system-parameter setting."""

    identifier: str
    dags: list[tuple[RankedDag, np.ndarray]]
    sys_params: SystemParams

    def __post_init__(self):
        if not self.dags:
            raise ConfigError(f"learning task {self.identifier!r} has an empty dataset")


@dataclass
class MetaState:
    theta: PolicyParams
    adam: AdamState
    iteration: int = 0
    meta_batch_size: int = 10


def meta_gradient(theta: PolicyParams, adapted: list[PolicyParams],
                  inner_lr: float, inner_steps: int) -> PolicyParams:
    """Average parameter displacement scaled back to gradient units:
    mean_i (theta'_i - theta) / inner_lr / inner_steps, elementwise."""
    if not adapted:
        raise ConfigError("meta_gradient needs at least one adapted parameter set")
    acc = theta.zeros_like()
    for prime in adapted:
        diff = prime.sub(theta)
        for k in acc.arrays:
            acc.arrays[k] += diff.arrays[k]
    denom = len(adapted) * inner_lr * inner_steps
    return PolicyParams({k: v / denom for k, v in acc.arrays.items()})


def _inner_worker(args):
    theta, cfg, task, hp, seed = args
    rng = np.random.default_rng(seed)
    adapted, _ = inner_update(theta, cfg, task.dags, task.sys_params, hp, rng)
    latency = evaluate_policy(adapted, cfg, task.dags, task.sys_params)
    return adapted, latency


def _run_inner_batch(theta, cfg, tasks, hp, seeds, workers):
    jobs = [(theta, cfg, task, hp, seed) for task, seed in zip(tasks, seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_inner_worker, jobs))
    else:
        results = [ _inner_worker(j) for j in jobs ]
    return results


def meta_train(state: MetaState, cfg: NetConfig, tasks: list[LearningTask],
               hp: HyperParams, iterations: int, rng: np.random.Generator,
               workers: int = 1, log: list | None = None) -> MetaState:
    """Run `iterations` outer steps, sampling tasks with replacement.

    Per-task inner updates are independent (parallelizable); results are
    reduced in sampling order so the outcome does not depend on `workers`.
    Appends one record per iteration to `log` when given.
    """
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    for _ in range(iterations):
        picked = [tasks[int(i)] for i in
                  rng.integers(len(tasks), size=state.meta_batch_size)]
        seeds = [int(s) for s in rng.integers(2**63 - 1, size=len(picked))]
        t0 = time.perf_counter()
        results = _run_inner_batch(state.theta, cfg, picked, hp, seeds, workers)
        adapted = [r[0] for r in results]
        latencies = [r[1] for r in results]
        grad = meta_gradient(state.theta, adapted, hp.inner_lr, hp.inner_steps)
        state.theta = adam_step(state.adam, state.theta, grad.scale(-1.0), hp.outer_lr)
        state.iteration += 1
        if log is not None:
            log.append(dict(
                iteration=state.iteration,
                task_ids=[t.identifier for t in picked],
                post_adaptation_latency=latencies,
                avg_latency=float(np.mean(latencies)),
                wall_time_s=time.perf_counter() - t0,
            ))
    return state


def adapt(theta_meta: PolicyParams, cfg: NetConfig, task: LearningTask,
          steps: int, hp: HyperParams, rng: np.random.Generator,
          eval_dags: list | None = None) -> list[tuple[int, float]]:
    """Adaptation sweep: step 0 evaluates the meta policy unchanged, each
    further step applies one inner-style update and re-evaluates greedy
    decoding over `eval_dags` (default: the task's own dataset)."""
    if steps < 0:
        raise ConfigError("steps must be >= 0")
    if eval_dags is None:
        eval_dags = task.dags
    theta = theta_meta
    curve = [(0, evaluate_policy(theta, cfg, eval_dags, task.sys_params))]
    for k in range(1, steps + 1):
        theta, _ = inner_update(theta, cfg, task.dags, task.sys_params, hp, rng)
        curve.append((k, evaluate_policy(theta, cfg, eval_dags, task.sys_params)))
    return curve


def pretrain_finetune(theta: PolicyParams, cfg: NetConfig,
                      tasks: list[LearningTask], hp: HyperParams,
                      iterations: int, rng: np.random.Generator) -> PolicyParams:
    """Plain-PPO pretraining baseline: repeated inner updates over the union
    of the training datasets, no meta-gradient. The result feeds the same
    adapt() procedure as the meta policy."""
    shared = all(t.sys_params == tasks[0].sys_params for t in tasks)
    if shared:
        union: list = []
        for t in tasks:
            union.extend(t.dags)
        for _ in range(iterations):
            theta, _ = inner_update(theta, cfg, union, tasks[0].sys_params, hp, rng)
    else:
        # Tasks differ in system parameters (e.g. transmission rates); a flat
        # union is ill-defined, so rotate uniformly through the tasks instead.
        for _ in range(iterations):
            task = tasks[int(rng.integers(len(tasks)))]
            theta, _ = inner_update(theta, cfg, task.dags, task.sys_params, hp, rng)
    return theta
