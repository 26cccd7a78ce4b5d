"""Named parameter collections with the algebra meta-training needs."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class NetConfig:
    """Shapes of the seq2seq policy/value network."""

    input_dim: int
    hidden: int = 256
    layers: int = 2
    act_embed: int = 16

    def __post_init__(self):
        if min(self.input_dim, self.hidden, self.layers, self.act_embed) < 1:
            raise ConfigError(f"network dimensions must be positive: {self}")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "layers": self.layers,
            "act_embed": self.act_embed,
        }


class PolicyParams:
    """A dict of named float64 arrays supporting copy/difference/scaled add."""

    def __init__(self, arrays: dict[str, np.ndarray]):
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def keys(self):
        return self.arrays.keys()

    def copy(self) -> "PolicyParams":
        return PolicyParams({k: v.copy() for k, v in self.arrays.items()})

    def _check_compatible(self, other: "PolicyParams"):
        if self.arrays.keys() != other.arrays.keys():
            raise ConfigError("parameter collections have different keys")
        for k in self.arrays:
            if self.arrays[k].shape != other.arrays[k].shape:
                raise ConfigError(f"shape mismatch for {k}")

    def sub(self, other: "PolicyParams") -> "PolicyParams":
        self._check_compatible(other)
        return PolicyParams({k: self.arrays[k] - other.arrays[k] for k in self.arrays})

    def add_scaled(self, other: "PolicyParams", scale: float) -> "PolicyParams":
        self._check_compatible(other)
        return PolicyParams({k: self.arrays[k] + scale * other.arrays[k] for k in self.arrays})

    def scale(self, factor: float) -> "PolicyParams":
        return PolicyParams({k: factor * v for k, v in self.arrays.items()})

    def zeros_like(self) -> "PolicyParams":
        return PolicyParams({k: np.zeros_like(v) for k, v in self.arrays.items()})

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.arrays[k].ravel() for k in sorted(self.arrays)])

    def unflatten(self, vec: np.ndarray) -> "PolicyParams":
        out, off = {}, 0
        for k in sorted(self.arrays):
            size = self.arrays[k].size
            out[k] = vec[off : off + size].reshape(self.arrays[k].shape).copy()
            off += size
        if off != vec.size:
            raise ConfigError(f"flat vector size {vec.size} != parameter count {off}")
        return PolicyParams(out)

    def allclose(self, other: "PolicyParams", **kw) -> bool:
        self._check_compatible(other)
        return all(np.allclose(self.arrays[k], other.arrays[k], **kw) for k in self.arrays)


def param_shapes(cfg: NetConfig) -> dict[str, tuple]:
    h, a = cfg.hidden, cfg.act_embed
    shapes: dict[str, tuple] = {}
    for l in range(cfg.layers):
        enc_in = cfg.input_dim if l == 0 else h
        dec_in = a + h if l == 0 else h
        for side, d in (("enc", enc_in), ("dec", dec_in)):
            shapes[f"{side}{l}_W"] = (4 * h, d + h)
            shapes[f"{side}{l}_b"] = (4 * h,)
            shapes[f"{side}{l}_g"] = (4 * h,)
            shapes[f"{side}{l}_o"] = (4 * h,)
    shapes["act_emb"] = (3, a)  # rows: start token, action 0, action 1
    shapes["att_Wd"] = (h, h)
    shapes["att_We"] = (h, h)
    shapes["att_b"] = (h,)
    shapes["att_v"] = (h,)
    for head, out in (("pol", 2), ("val", 1)):
        shapes[f"{head}_W1"] = (h, h)
        shapes[f"{head}_b1"] = (h,)
        shapes[f"{head}_W2"] = (out, h)
        shapes[f"{head}_b2"] = (out,)
    return shapes


def init_params(cfg: NetConfig, rng: np.random.Generator) -> PolicyParams:
    """Uniform [-0.08, 0.08] weights, zero biases, identity layer norm."""
    arrays = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_g"):
            arrays[name] = np.ones(shape)
        elif name.endswith(("_b", "_o", "_b1", "_b2")):
            arrays[name] = np.zeros(shape)
        else:
            arrays[name] = rng.uniform(-0.08, 0.08, size=shape)
    return PolicyParams(arrays)


def save_checkpoint(path, params: PolicyParams, cfg: NetConfig) -> None:
    """Named-array container with a config header; little-endian float64."""
    payload = {k: v.astype("<f8") for k, v in params.arrays.items()}
    payload["__config__"] = np.frombuffer(
        json.dumps(cfg.to_dict()).encode("utf-8"), dtype=np.uint8
    )
    np.savez(path, **payload)


def load_checkpoint(path, expect_cfg: NetConfig | None = None) -> tuple[PolicyParams, NetConfig]:
    with np.load(path) as z:
        cfg = NetConfig(**json.loads(bytes(z["__config__"]).decode("utf-8")))
        arrays = {k: z[k].astype(np.float64) for k in z.files if k != "__config__"}
    if expect_cfg is not None and cfg != expect_cfg:
        raise ConfigError(f"checkpoint config {cfg} does not match expected {expect_cfg}")
    expected = param_shapes(cfg)
    if set(arrays) != set(expected):
        raise ConfigError("checkpoint parameter names do not match the config")
    for k, shape in expected.items():
        if arrays[k].shape != shape:
            raise ConfigError(f"checkpoint array {k} has shape {arrays[k].shape}, want {shape}")
    return PolicyParams(arrays), cfg
