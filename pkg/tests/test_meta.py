import numpy as np
import pytest

from mrlco.dag import GeneratorConfig, compute_rank, embed_dag
from mrlco.errors import ConfigError
from mrlco.meta import (
    LearningTask,
    MetaState,
    adapt,
    meta_gradient,
    meta_train,
    pretrain_finetune,
)
from mrlco.net import AdamState, NetConfig, PolicyParams, init_params
from mrlco.ppo import HyperParams
from mrlco.sim import SystemParams


def make_task(dags, params, gcfg, name="t"):
    prepared = []
    for d in dags:
        r = compute_rank(d, params)
        prepared.append((r, embed_dag(r, gcfg)))
    return LearningTask(identifier=name, dags=prepared, sys_params=params)


@pytest.fixture
def setting(params, small_dags):
    gcfg = GeneratorConfig(n=8)
    cfg = NetConfig(input_dim=4 + 2 * gcfg.pad_width, hidden=8, layers=2)
    theta = init_params(cfg, np.random.default_rng(0))
    task = make_task(small_dags[:3], params, gcfg)
    return cfg, theta, task, gcfg


def test_meta_gradient_is_mean_displacement_over_alpha_m():
    theta = PolicyParams({"w": np.array([1.0, 2.0])})
    a1 = PolicyParams({"w": np.array([1.5, 2.0])})
    a2 = PolicyParams({"w": np.array([0.5, 3.0])})
    g = meta_gradient(theta, [a1, a2], inner_lr=0.1, inner_steps=5)
    # mean displacement = [0.0, 0.5]; divided by (0.1 * 5)
    assert np.allclose(g["w"], [0.0, 1.0], atol=1e-15)
    with pytest.raises(ConfigError):
        meta_gradient(theta, [], 0.1, 5)


def test_learning_task_rejects_empty_dataset(params):
    with pytest.raises(ConfigError):
        LearningTask(identifier="x", dags=[], sys_params=params)


def test_meta_train_advances_state_and_logs(setting):
    cfg, theta, task, _ = setting
    hp = HyperParams(inner_steps=2, trajectories_per_dag=2)
    state = MetaState(theta=theta, adam=AdamState(theta), meta_batch_size=2)
    log = []
    state = meta_train(state, cfg, [task], hp, iterations=2,
                       rng=np.random.default_rng(1), log=log)
    assert state.iteration == 2
    assert len(log) == 2
    assert log[0]["task_ids"] == ["t", "t"]
    assert not state.theta.allclose(theta, rtol=0.0, atol=0.0)


def test_meta_train_worker_count_invariance(setting):
    cfg, theta, task, gcfg = setting
    hp = HyperParams(inner_steps=2, trajectories_per_dag=2)

    def run(workers):
        state = MetaState(theta=theta, adam=AdamState(theta), meta_batch_size=2)
        return meta_train(state, cfg, [task], hp, iterations=2,
                          rng=np.random.default_rng(7), workers=workers).theta

    a = run(1)
    b = run(2)
    assert a.allclose(b, rtol=0.0, atol=0.0)


def test_adapt_step_zero_is_unadapted_policy(setting):
    cfg, theta, task, _ = setting
    hp = HyperParams(inner_steps=1, trajectories_per_dag=2)
    curve = adapt(theta, cfg, task, steps=2, hp=hp, rng=np.random.default_rng(2))
    assert [s for s, _ in curve] == [0, 1, 2]
    from mrlco.ppo import evaluate_policy

    assert curve[0][1] == pytest.approx(
        evaluate_policy(theta, cfg, task.dags, task.sys_params), rel=1e-12
    )
    with pytest.raises(ConfigError):
        adapt(theta, cfg, task, steps=-1, hp=hp, rng=np.random.default_rng(2))


def test_pretrain_finetune_union_and_rotation(setting, params, small_dags):
    cfg, theta, task, gcfg = setting
    hp = HyperParams(inner_steps=1, trajectories_per_dag=2)
    out = pretrain_finetune(theta, cfg, [task], hp, iterations=1,
                            rng=np.random.default_rng(3))
    assert not out.allclose(theta, rtol=0.0, atol=0.0)
    other = SystemParams(f_ue=1e9, f_host=4e10, user_count=4, r_ul=5e6, r_dl=5e6)
    task2 = make_task(small_dags[3:5], other, gcfg, name="u")
    out2 = pretrain_finetune(theta, cfg, [task, task2], hp, iterations=2,
                             rng=np.random.default_rng(4))
    assert not out2.allclose(theta, rtol=0.0, atol=0.0)
