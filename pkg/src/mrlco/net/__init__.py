from .adam import AdamState, adam_step
from .network import (
    ForwardTrace,
    backward,
    decode,
    encode,
    forward,
    greedy_action,
    policy_grad_from_logp,
    sample_action,
)
from .params import (
    NetConfig,
    PolicyParams,
    init_params,
    load_checkpoint,
    param_shapes,
    save_checkpoint,
)

__all__ = [
    "AdamState", "adam_step", "ForwardTrace", "backward", "decode", "encode",
    "forward", "greedy_action", "policy_grad_from_logp", "sample_action",
    "NetConfig", "PolicyParams", "init_params", "load_checkpoint",
    "param_shapes", "save_checkpoint",
]
