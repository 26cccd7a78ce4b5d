"""Bias-corrected Adam over named parameter collections."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from .params import PolicyParams


class AdamState:
    """First/second moment estimates and step counter, one slot per array."""

    def __init__(self, params: PolicyParams, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = params.zeros_like()
        self.v = params.zeros_like()


def adam_step(state: AdamState, params: PolicyParams, grads: PolicyParams,
              lr: float) -> PolicyParams:
    """One descent step on `grads`; pass the gradient of a loss.

    Objectives in this package are maximized, so callers hand in the negated
    objective gradient. Returns the updated parameters; `state` is advanced
    in place.
    """
    if params.arrays.keys() != grads.arrays.keys():
        raise ConfigError("gradient keys do not match parameters")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    out = {}
    for k, g in grads.arrays.items():
        if g.shape != params.arrays[k].shape:
            raise ConfigError(f"gradient shape mismatch for {k}")
        state.m.arrays[k] = b1 * state.m.arrays[k] + (1.0 - b1) * g
        state.v.arrays[k] = b2 * state.v.arrays[k] + (1.0 - b2) * g * g
        mhat = state.m.arrays[k] / bc1
        vhat = state.v.arrays[k] / bc2
        out[k] = params.arrays[k] - lr * mhat / (np.sqrt(vhat) + state.eps)
    return PolicyParams(out)
