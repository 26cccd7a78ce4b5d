"""Task-specific ("inner loop") training: trajectory collection, GAE, and
the clipped-surrogate PPO update.

One update snapshots the current policy, samples a fixed trajectory set
under it, then performs a small number of Adam ascent steps on the clipped
surrogate minus the value loss, reusing the same trajectories throughout.
DAGs of equal task count are processed in single batched network passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dag import RankedDag
from .errors import ConfigError
from .net import (
    AdamState,
    NetConfig,
    PolicyParams,
    adam_step,
    backward,
    decode,
    forward,
    policy_grad_from_logp,
)
from .sim import OffloadEnv, SystemParams, evaluate_plan


@dataclass(frozen=True)
class HyperParams:
    """Training hyperparameters; defaults follow the published configuration."""

    gamma: float = 0.99
    lam: float = 0.95
    clip_eps: float = 0.2
    vf_coef: float = 0.5
    inner_lr: float = 5e-4
    outer_lr: float = 5e-4
    inner_steps: int = 3
    trajectories_per_dag: int = 20
    minibatch_size: int | None = None
    normalize_advantages: bool = True
    normalize_reward: bool = True
    advantage_grouping: str = "batch"

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0 and 0.0 <= self.lam <= 1.0):
            raise ConfigError("gamma and lam must lie in [0, 1]")
        if self.clip_eps <= 0 or self.inner_steps < 1 or self.trajectories_per_dag < 1:
            raise ConfigError(f"invalid hyperparameters: {self}")
        if self.advantage_grouping not in ("batch", "dag", "dag_step"):
            raise ConfigError(
                f"advantage_grouping must be batch, dag, or dag_step, "
                f"got {self.advantage_grouping!r}")


@dataclass
class Trajectory:
    """One episode record under the frozen sample policy."""

    dag_index: int
    actions: np.ndarray
    rewards: np.ndarray
    logp_old: np.ndarray
    values_old: np.ndarray

    def __post_init__(self):
        n = len(self.actions)
        if not (len(self.rewards) == len(self.logp_old) == len(self.values_old) == n):
            raise ConfigError("trajectory field lengths are inconsistent")
        if not np.all(np.isfinite(self.logp_old)) or np.any(self.logp_old > 0):
            raise ConfigError("log-probabilities must be finite and <= 0")


@dataclass
class AdvantageSet:
    advantages: np.ndarray
    returns: np.ndarray


def collect(params: PolicyParams, cfg: NetConfig,
            dags: list[tuple[RankedDag, np.ndarray]], sys_params: SystemParams,
            count: int, rng: np.random.Generator,
            normalize_reward: bool = True) -> list[Trajectory]:
    """Sample `count` episodes per DAG under the given (frozen) policy."""
    if not dags:
        raise ConfigError("collect needs a nonempty dataset")
    out: list[Trajectory] = []
    for indices, emb_stack in _blocks(dags):
        actions, logps, values, groups = decode(params, cfg, emb_stack, count, rng=rng)
        for b in range(actions.shape[0]):
            k = indices[int(groups[b])]
            ranked, emb = dags[k]
            env = OffloadEnv(ranked, emb, sys_params, normalize_reward=normalize_reward)
            env.reset()
            rewards = np.array([env.step(int(a)).reward for a in actions[b]])
            out.append(Trajectory(
                dag_index=k, actions=actions[b], rewards=rewards,
                logp_old=logps[b], values_old=values[b],
            ))
    return out


def _blocks(dags):
    """Partition DAG indices by task count so batches stack cleanly."""
    by_n: dict[int, list[int]] = {}
    for k, (ranked, _) in enumerate(dags):
        by_n.setdefault(ranked.n, []).append(k)
    blocks = []
    for n in sorted(by_n):
        idx = by_n[n]
        blocks.append((idx, np.stack([dags[k][1] for k in idx])))
    return blocks


def gae(traj: Trajectory, gamma: float, lam: float) -> AdvantageSet:
    """Exponentially weighted TD-residual advantages and discounted returns.

    Terminal value is 0; returns[t] is the plain discounted reward-to-go
    used as the value regression target.
    """
    r, v = traj.rewards, traj.values_old
    n = len(r)
    adv = np.zeros(n)
    ret = np.zeros(n)
    next_adv = 0.0
    next_ret = 0.0
    next_v = 0.0
    for t in range(n - 1, -1, -1):
        delta = r[t] + gamma * next_v - v[t]
        next_adv = delta + gamma * lam * next_adv
        next_ret = r[t] + gamma * next_ret
        adv[t] = next_adv
        ret[t] = next_ret
        next_v = v[t]
    return AdvantageSet(advantages=adv, returns=ret)


def _standardize_advantages(trajectories, advantages, grouping):
    """Standardize advantages to zero mean / unit variance in place.

    Grouping controls the population each statistic is taken over: the whole
    batch, all steps of one DAG's trajectories, or one (DAG, step) column
    across that DAG's trajectories. Finer groupings act as empirical
    baselines that cancel DAG- and step-level return offsets, so the
    surviving signal ranks same-state actions against each other.
    """
    groups: dict[tuple, list[tuple[int, int]]] = {}
    for i, t in enumerate(trajectories):
        for s in range(len(t.actions)):
            if grouping == "batch":
                key = ()
            elif grouping == "dag":
                key = (t.dag_index,)
            else:
                key = (t.dag_index, s)
            groups.setdefault(key, []).append((i, s))
    for members in groups.values():
        vals = np.array([advantages[i].advantages[s] for i, s in members])
        mu, sd = vals.mean(), vals.std()
        for (i, s), v in zip(members, vals):
            advantages[i].advantages[s] = (v - mu) / sd if sd > 0 else 0.0


def _batches(trajectories, advantages, dags):
    """Stack trajectories into per-block arrays for batched passes."""
    batches = []
    for indices, emb_stack in _blocks(dags):
        local = {k: g for g, k in enumerate(indices)}
        rows = [i for i, t in enumerate(trajectories) if t.dag_index in local]
        if not rows:
            continue
        batches.append(dict(
            embeddings=emb_stack,
            groups=np.array([local[trajectories[i].dag_index] for i in rows]),
            actions=np.stack([trajectories[i].actions for i in rows]),
            logp_old=np.stack([trajectories[i].logp_old for i in rows]),
            adv=np.stack([advantages[i].advantages for i in rows]),
            ret=np.stack([advantages[i].returns for i in rows]),
        ))
    return batches


def ppo_objective(target: PolicyParams, cfg: NetConfig, batches: list[dict],
                  hp: HyperParams) -> tuple[float, PolicyParams, dict]:
    """Clipped surrogate minus value loss, with its exact parameter gradient.

    Means are taken over every step in the batch. Returns (objective,
    gradient for ascent, stats).
    """
    total_steps = sum(b["actions"].size for b in batches)
    grads = target.zeros_like()
    j_clip = 0.0
    j_vf = 0.0
    ratio_sum, ratio_count = 0.0, 0
    for bt in batches:
        trace = forward(target, cfg, bt["embeddings"], bt["actions"], bt["groups"])
        if not np.all(np.isfinite(trace.logits)) or not np.all(np.isfinite(trace.values)):
            raise FloatingPointError("non-finite network output in PPO objective")
        B, n = bt["actions"].shape
        rows = np.arange(B)[:, None]
        cols = np.arange(n)[None, :]
        logp_new = trace.log_probs[rows, cols, bt["actions"]]
        ratio = np.exp(logp_new - bt["logp_old"])
        adv = bt["adv"]
        clipped = np.clip(ratio, 1.0 - hp.clip_eps, 1.0 + hp.clip_eps)
        surr1 = ratio * adv
        surr2 = clipped * adv
        take1 = surr1 <= surr2
        j_clip += np.where(take1, surr1, surr2).sum()
        verr = trace.values - bt["ret"]
        j_vf += (verr * verr).sum()
        ratio_sum += ratio.sum()
        ratio_count += ratio.size

        # d/dlogp_new of the surrogate: gradient only flows through the
        # unclipped branch (the clipped branch is constant in the params).
        w = np.where(take1, ratio * adv, 0.0) / total_steps
        dlogp = np.zeros_like(trace.log_probs)
        dlogp[rows, cols, bt["actions"]] = w
        dlogits = policy_grad_from_logp(trace, dlogp)
        dvalues = -hp.vf_coef * 2.0 * verr / total_steps
        part = backward(trace, target, dlogits, dvalues)
        for k in grads.arrays:
            grads.arrays[k] += part.arrays[k]
    objective = j_clip / total_steps - hp.vf_coef * j_vf / total_steps
    stats = dict(
        j_clip=j_clip / total_steps,
        j_vf=j_vf / total_steps,
        mean_ratio=ratio_sum / ratio_count,
    )
    return float(objective), grads, stats


def inner_update(theta: PolicyParams, cfg: NetConfig,
                 dags: list[tuple[RankedDag, np.ndarray]],
                 sys_params: SystemParams, hp: HyperParams,
                 rng: np.random.Generator) -> tuple[PolicyParams, dict]:
    """One task-specific update: sample once, then m Adam steps on the
    PPO objective with a fresh optimizer state. Returns (new params, info)."""
    trajectories = collect(theta, cfg, dags, sys_params, hp.trajectories_per_dag,
                           rng, normalize_reward=hp.normalize_reward)
    advantages = [gae(t, hp.gamma, hp.lam) for t in trajectories]
    if hp.normalize_advantages:
        _standardize_advantages(trajectories, advantages, hp.advantage_grouping)

    total_steps = sum(len(t.actions) for t in trajectories)
    adam = AdamState(theta)
    current = theta
    checkpoints = [theta]
    objectives = []
    for _ in range(hp.inner_steps):
        if hp.minibatch_size is not None and hp.minibatch_size < total_steps:
            mean_n = total_steps / len(trajectories)
            take = max(1, round(hp.minibatch_size / mean_n))
            idx = rng.choice(len(trajectories), size=min(take, len(trajectories)),
                             replace=False)
            sel = sorted(int(i) for i in idx)
            batches = _batches([trajectories[i] for i in sel],
                               [advantages[i] for i in sel], dags)
        else:
            batches = _batches(trajectories, advantages, dags)
        obj, grads, _ = ppo_objective(current, cfg, batches, hp)
        current = adam_step(adam, current, grads.scale(-1.0), hp.inner_lr)
        checkpoints.append(current)
        objectives.append(obj)
    info = dict(checkpoints=checkpoints, objectives=objectives,
                trajectories=trajectories)
    return current, info


def evaluate_policy(params: PolicyParams, cfg: NetConfig,
                    dags: list[tuple[RankedDag, np.ndarray]],
                    sys_params: SystemParams) -> float:
    """Average latency (ms) of greedy decoding over a dataset."""
    total = 0.0
    for indices, emb_stack in _blocks(dags):
        actions, _, _, groups = decode(params, cfg, emb_stack, 1, greedy=True)
        for b in range(actions.shape[0]):
            ranked, _ = dags[indices[int(groups[b])]]
            total += evaluate_plan(ranked, actions[b], sys_params)
    return total / len(dags)
