import numpy as np

from mrlco.net import AdamState, NetConfig, PolicyParams, adam_step, init_params


def scalar_params(x):
    return PolicyParams({"w": np.array([x])})


def test_adam_first_step_size_is_lr():
    # with any gradient, bias correction makes |step 1| == lr exactly
    theta = scalar_params(1.0)
    state = AdamState(theta)
    grads = PolicyParams({"w": np.array([3.7])})
    new = adam_step(state, theta, grads, lr=0.01)
    assert np.isclose(new["w"][0], 1.0 - 0.01, atol=1e-12)


def test_adam_matches_reference_recursion():
    rng = np.random.default_rng(0)
    theta = scalar_params(0.5)
    state = AdamState(theta)
    b1, b2, eps, lr = 0.9, 0.999, 1e-8, 0.05
    m = v = 0.0
    x = 0.5
    for t in range(1, 8):
        g = float(rng.normal())
        grads = PolicyParams({"w": np.array([g])})
        theta = adam_step(state, theta, grads, lr=lr)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mh = m / (1 - b1**t)
        vh = v / (1 - b2**t)
        x = x - lr * mh / (np.sqrt(vh) + eps)
        assert np.isclose(theta["w"][0], x, atol=1e-12)


def test_adam_minimizes_quadratic():
    cfg = NetConfig(input_dim=3, hidden=4, layers=1, act_embed=2)
    theta = init_params(cfg, np.random.default_rng(1))
    state = AdamState(theta)
    for _ in range(400):
        grads = theta.copy()  # gradient of 0.5 * ||theta||^2
        theta = adam_step(state, theta, grads, lr=0.02)
    assert max(np.abs(v).max() for v in theta.arrays.values()) < 1e-3


def test_adam_state_is_per_parameter():
    theta = PolicyParams({"a": np.zeros(2), "b": np.ones(3)})
    state = AdamState(theta)
    grads = PolicyParams({"a": np.array([1.0, 0.0]), "b": np.zeros(3)})
    new = adam_step(state, theta, grads, lr=0.1)
    assert new["a"][0] != 0.0 and new["a"][1] == 0.0
    assert np.array_equal(new["b"], np.ones(3))
