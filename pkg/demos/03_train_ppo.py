"""Train the seq2seq policy from scratch with PPO on a small fixed dataset.

Prints the greedy-decoded average latency every few updates next to the
HEFT and optimal references. Takes a couple of minutes on one core.
"""

import numpy as np

from mrlco.baselines import heft_schedule, optimal_schedule, plan_latency
from mrlco.dag import GeneratorConfig, compute_rank, embed_dag, generate_dataset
from mrlco.net import NetConfig, init_params
from mrlco.ppo import HyperParams, evaluate_policy, inner_update
from mrlco.sim import SystemParams

UPDATES = 60

params = SystemParams(f_ue=1e9, f_host=4e10, user_count=12, r_ul=1e7, r_dl=1e7)
gen = GeneratorConfig(n=10, fat=1.0, density=0.5, ccr_range=(0.1, 0.8), seed=1)
dataset = []
for dag in generate_dataset(gen, 10):
    ranked = compute_rank(dag, params)
    dataset.append((ranked, embed_dag(ranked, gen)))

heft = np.mean([plan_latency(r, heft_schedule(r, params), params) for r, _ in dataset])
opt = np.mean([optimal_schedule(r, params)[1] for r, _ in dataset])
print(f"references: heft {heft:.2f} ms, optimal {opt:.2f} ms")

cfg = NetConfig(input_dim=4 + 2 * gen.pad_width, hidden=64, layers=2)
theta = init_params(cfg, np.random.default_rng(0))
# Undiscounted returns with a per-(DAG, step) empirical baseline give
# sharp per-task credit; several Adam steps per collection make each
# update count on a tiny fixed dataset.
hp = HyperParams(gamma=1.0, lam=1.0, inner_lr=5e-4, clip_eps=0.1,
                 vf_coef=0.1, trajectories_per_dag=40, inner_steps=10,
                 advantage_grouping="dag_step")

for it in range(UPDATES):
    theta, info = inner_update(theta, cfg, dataset, params, hp,
                               np.random.default_rng(100 + it))
    if (it + 1) % 10 == 0:
        latency = evaluate_policy(theta, cfg, dataset, params)
        print(f"update {it + 1:3d}: greedy avg latency {latency:7.2f} ms "
              f"(objective {info['objectives'][-1]:+.4f})")
