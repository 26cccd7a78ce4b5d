"""Seq2seq policy/value network with exact reverse-mode gradients.

Encoder and decoder are stacked LSTM layers with layer normalization on the
concatenated gate pre-activations. The decoder attends over the encoder
outputs through a small feedforward score network and feeds each step the
embedding of the previous action plus the attention context. Two tanh-hidden
heads on the decoder outputs produce binary offloading logits and a scalar
value estimate.

Everything is float64 numpy. Batching covers many DAGs and many episodes at
once: the encoder runs over G embedding sequences of equal length, the
decoder over B action sequences, with `groups[b]` naming the DAG episode b
belongs to. backward() reproduces the exact gradient of any linear
functional of the logits and values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolError
from .params import NetConfig, PolicyParams

LN_EPS = 1e-8


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


# ---------------------------------------------------------------------------
# LSTM cell with layer norm, batch-first


def _cell_forward(params, prefix, x, h_prev, c_prev):
    W, b = params[f"{prefix}_W"], params[f"{prefix}_b"]
    g, o = params[f"{prefix}_g"], params[f"{prefix}_o"]
    hidden = h_prev.shape[-1]
    cat = np.concatenate([x, h_prev], axis=-1)
    z = cat @ W.T + b
    mu = z.mean(axis=-1, keepdims=True)
    dev = z - mu
    invstd = 1.0 / np.sqrt((dev * dev).mean(axis=-1, keepdims=True) + LN_EPS)
    zhat = dev * invstd
    zn = g * zhat + o
    zi, zf, zg, zo = np.split(zn, 4, axis=-1)
    ia, fa, ga, oa = _sigmoid(zi), _sigmoid(zf), np.tanh(zg), _sigmoid(zo)
    c = fa * c_prev + ia * ga
    tc = np.tanh(c)
    h = oa * tc
    cache = dict(cat=cat, zhat=zhat, invstd=invstd, ia=ia, fa=fa, ga=ga, oa=oa,
                 c_prev=c_prev, tc=tc, hidden=hidden)
    return h, c, cache


def _cell_backward(params, grads, prefix, dh, dc_in, cache):
    W = params[f"{prefix}_W"]
    g = params[f"{prefix}_g"]
    ia, fa, ga, oa = cache["ia"], cache["fa"], cache["ga"], cache["oa"]
    tc, c_prev = cache["tc"], cache["c_prev"]

    dc = dc_in + dh * oa * (1.0 - tc * tc)
    doa = dh * tc
    dzn = np.concatenate(
        [
            dc * ga * ia * (1.0 - ia),
            dc * c_prev * fa * (1.0 - fa),
            dc * ia * (1.0 - ga * ga),
            doa * oa * (1.0 - oa),
        ],
        axis=-1,
    )
    zhat, invstd = cache["zhat"], cache["invstd"]
    grads.arrays[f"{prefix}_g"] += (dzn * zhat).sum(axis=0)
    grads.arrays[f"{prefix}_o"] += dzn.sum(axis=0)
    dzhat = dzn * g
    dz = invstd * (
        dzhat
        - dzhat.mean(axis=-1, keepdims=True)
        - zhat * (dzhat * zhat).mean(axis=-1, keepdims=True)
    )
    cat = cache["cat"]
    grads.arrays[f"{prefix}_W"] += dz.T @ cat
    grads.arrays[f"{prefix}_b"] += dz.sum(axis=0)
    dcat = dz @ W
    dx = dcat[:, : -cache["hidden"]]
    dh_prev = dcat[:, -cache["hidden"]:]
    dc_prev = dc * fa
    return dx, dh_prev, dc_prev


# ---------------------------------------------------------------------------
# Encoder


def _as_batched(embeddings: np.ndarray) -> np.ndarray:
    if embeddings.ndim == 2:
        return embeddings[None, :, :]
    if embeddings.ndim == 3:
        return embeddings
    raise ProtocolError(f"embeddings must be (n, D) or (G, n, D), got {embeddings.shape}")


def encode(params: PolicyParams, cfg: NetConfig, embeddings: np.ndarray):
    """Encoder stack over G equal-length embedding sequences.

    Returns (enc_out (G, n, H), final_h, final_c, caches) where final_h/c
    are per-layer (G, H) arrays and caches[t][l] the step/layer cell caches.
    """
    emb = _as_batched(embeddings)
    G, n, _ = emb.shape
    h = [np.zeros((G, cfg.hidden)) for _ in range(cfg.layers)]
    c = [np.zeros((G, cfg.hidden)) for _ in range(cfg.layers)]
    caches = []
    enc_out = np.zeros((G, n, cfg.hidden))
    for t in range(n):
        x = emb[:, t, :]
        step_caches = []
        for l in range(cfg.layers):
            h[l], c[l], cache = _cell_forward(params, f"enc{l}", x, h[l], c[l])
            step_caches.append(cache)
            x = h[l]
        caches.append(step_caches)
        enc_out[:, t, :] = h[-1]
    return enc_out, h, c, caches


# ---------------------------------------------------------------------------
# Attention


def _attention_forward(params, d_prev, eo, we_e):
    """score(d, e_i) = v . tanh(Wd d + We e_i + b); eo/we_e are per-sample
    (B, n, H) gathers of the encoder outputs."""
    pre = d_prev @ params["att_Wd"].T  # (B, H)
    sc = np.tanh(pre[:, None, :] + we_e + params["att_b"])  # (B, n, H)
    scores = sc @ params["att_v"]  # (B, n)
    scores = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    alpha = e / e.sum(axis=1, keepdims=True)
    ctx = np.einsum("bn,bnh->bh", alpha, eo)
    return alpha, ctx, dict(sc=sc, alpha=alpha, d_prev=d_prev)


def _attention_backward(params, grads, dctx, cache, eo, d_eo):
    """Returns d(d_prev); adds the encoder-output gradient into d_eo (B, n, H)."""
    alpha, sc, d_prev = cache["alpha"], cache["sc"], cache["d_prev"]
    dalpha = np.einsum("bh,bnh->bn", dctx, eo)
    d_eo += alpha[:, :, None] * dctx[:, None, :]
    dscores = alpha * (dalpha - (dalpha * alpha).sum(axis=1, keepdims=True))
    dsc = dscores[:, :, None] * params["att_v"]
    grads.arrays["att_v"] += (dscores[:, :, None] * sc).sum(axis=(0, 1))
    dpre = dsc * (1.0 - sc * sc)  # (B, n, H)
    grads.arrays["att_b"] += dpre.sum(axis=(0, 1))
    grads.arrays["att_We"] += np.einsum("bns,bnh->sh", dpre, eo)
    d_eo += np.einsum("bns,sh->bnh", dpre, params["att_We"])
    dpre_sum = dpre.sum(axis=1)
    grads.arrays["att_Wd"] += dpre_sum.T @ d_prev
    return dpre_sum @ params["att_Wd"]


def _head_forward(params, head, h):
    ph = np.tanh(h @ params[f"{head}_W1"].T + params[f"{head}_b1"])
    out = ph @ params[f"{head}_W2"].T + params[f"{head}_b2"]
    return out, ph


def _head_backward(params, grads, head, dout, ph, h):
    grads.arrays[f"{head}_W2"] += dout.T @ ph
    grads.arrays[f"{head}_b2"] += dout.sum(axis=0)
    dph = dout @ params[f"{head}_W2"]
    dpre = dph * (1.0 - ph * ph)
    grads.arrays[f"{head}_W1"] += dpre.T @ h
    grads.arrays[f"{head}_b1"] += dpre.sum(axis=0)
    return dpre @ params[f"{head}_W1"]


def _log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def _resolve_groups(G, B, groups):
    if groups is None:
        if G != 1:
            raise ProtocolError("groups required when batching multiple DAGs")
        return np.zeros(B, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if groups.shape != (B,) or groups.min() < 0 or groups.max() >= G:
        raise ProtocolError(f"groups must be (B,) indices into {G} DAGs")
    return groups


# ---------------------------------------------------------------------------
# Full forward with caching


@dataclass
class ForwardTrace:
    """Everything backward() needs, plus the per-step network outputs."""

    cfg: NetConfig
    embeddings: np.ndarray       # (G, n, D)
    actions: np.ndarray          # (B, n)
    groups: np.ndarray           # (B,)
    enc_out: np.ndarray          # (G, n, H)
    enc_caches: list
    dec_caches: list             # [n][layers]
    att_caches: list             # [n]
    aidx: list                   # [n] int arrays (B,)
    h_tops: list                 # [n] (B, H)
    pol_ph: list
    val_ph: list
    logits: np.ndarray           # (B, n, 2)
    log_probs: np.ndarray        # (B, n, 2)
    values: np.ndarray           # (B, n)


def forward(params: PolicyParams, cfg: NetConfig, embeddings: np.ndarray,
            actions: np.ndarray, groups: np.ndarray | None = None) -> ForwardTrace:
    """Teacher-forced pass over B action sequences spanning G DAGs."""
    emb = _as_batched(embeddings)
    actions = np.asarray(actions, dtype=np.int64)
    if actions.ndim == 1:
        actions = actions[None, :]
    B, n = actions.shape
    G = emb.shape[0]
    if n != emb.shape[1]:
        raise ProtocolError(f"actions length {n} != sequence length {emb.shape[1]}")
    groups = _resolve_groups(G, B, groups)

    enc_out, enc_h, enc_c, enc_caches = encode(params, cfg, emb)
    we_e = enc_out @ params["att_We"].T
    eo = enc_out[groups]          # (B, n, H) views per episode
    we_eb = we_e[groups]

    h = [enc_h[l][groups] for l in range(cfg.layers)]
    c = [enc_c[l][groups] for l in range(cfg.layers)]

    dec_caches, att_caches, aidx_list, h_tops = [], [], [], []
    pol_ph, val_ph = [], []
    logits = np.zeros((B, n, 2))
    values = np.zeros((B, n))
    for j in range(n):
        _, ctx, att_cache = _attention_forward(params, h[-1], eo, we_eb)
        aidx = np.zeros(B, dtype=np.int64) if j == 0 else actions[:, j - 1] + 1
        x = np.concatenate([params["act_emb"][aidx], ctx], axis=-1)
        step_caches = []
        for l in range(cfg.layers):
            h[l], c[l], cache = _cell_forward(params, f"dec{l}", x, h[l], c[l])
            step_caches.append(cache)
            x = h[l]
        top = h[-1]
        lg, pph = _head_forward(params, "pol", top)
        vv, vph = _head_forward(params, "val", top)
        logits[:, j, :] = lg
        values[:, j] = vv[:, 0]
        dec_caches.append(step_caches)
        att_caches.append(att_cache)
        aidx_list.append(aidx)
        h_tops.append(top)
        pol_ph.append(pph)
        val_ph.append(vph)

    return ForwardTrace(
        cfg=cfg, embeddings=emb, actions=actions, groups=groups, enc_out=enc_out,
        enc_caches=enc_caches, dec_caches=dec_caches, att_caches=att_caches,
        aidx=aidx_list, h_tops=h_tops, pol_ph=pol_ph, val_ph=val_ph,
        logits=logits, log_probs=_log_softmax(logits), values=values,
    )


def backward(trace: ForwardTrace, params: PolicyParams, dlogits: np.ndarray,
             dvalues: np.ndarray) -> PolicyParams:
    """Exact gradient of sum(dlogits * logits) + sum(dvalues * values)."""
    if trace.dec_caches is None:
        raise ProtocolError("trace has no cached intermediates")
    cfg = trace.cfg
    B, n = trace.actions.shape
    G = trace.enc_out.shape[0]
    groups = trace.groups
    grads = params.zeros_like()
    eo = trace.enc_out[groups]
    d_eo = np.zeros_like(eo)     # (B, n, H), folded to G at the end
    d_final_h = [np.zeros((G, cfg.hidden)) for _ in range(cfg.layers)]
    d_final_c = [np.zeros((G, cfg.hidden)) for _ in range(cfg.layers)]

    dh_next = [np.zeros((B, cfg.hidden)) for _ in range(cfg.layers)]
    dc_next = [np.zeros((B, cfg.hidden)) for _ in range(cfg.layers)]
    datt_prev = np.zeros((B, cfg.hidden))
    for j in range(n - 1, -1, -1):
        top = trace.h_tops[j]
        dh_top = (
            _head_backward(params, grads, "pol", dlogits[:, j, :], trace.pol_ph[j], top)
            + _head_backward(params, grads, "val", dvalues[:, j][:, None], trace.val_ph[j], top)
            + dh_next[-1]
            + datt_prev
        )
        dx_below = None
        for l in range(cfg.layers - 1, -1, -1):
            dh = dh_top if l == cfg.layers - 1 else dh_next[l] + dx_below
            dx_below, dh_prev, dc_prev = _cell_backward(
                params, grads, f"dec{l}", dh, dc_next[l], trace.dec_caches[j][l]
            )
            if j == 0:
                np.add.at(d_final_h[l], groups, dh_prev)
                np.add.at(d_final_c[l], groups, dc_prev)
                dh_next[l] = np.zeros_like(dh_prev)
            else:
                dh_next[l] = dh_prev
            dc_next[l] = dc_prev
        demb = dx_below[:, : cfg.act_embed]
        dctx = dx_below[:, cfg.act_embed:]
        np.add.at(grads.arrays["act_emb"], trace.aidx[j], demb)
        dd_prev = _attention_backward(params, grads, dctx, trace.att_caches[j], eo, d_eo)
        if j == 0:
            np.add.at(d_final_h[-1], groups, dd_prev)
            datt_prev = np.zeros_like(dd_prev)
        else:
            datt_prev = dd_prev

    d_enc_out = np.zeros_like(trace.enc_out)  # (G, n, H)
    np.add.at(d_enc_out, groups, d_eo)

    # Encoder BPTT, seeded by attention/context use of each output and by the
    # decoder's initial states (the encoder finals of every layer).
    dh_e = [d_final_h[l] for l in range(cfg.layers)]
    dc_e = [d_final_c[l] for l in range(cfg.layers)]
    for t in range(trace.enc_out.shape[1] - 1, -1, -1):
        dx_below = None
        for l in range(cfg.layers - 1, -1, -1):
            dh = dh_e[l] + (d_enc_out[:, t, :] if l == cfg.layers - 1 else dx_below)
            dx_below, dh_prev, dc_prev = _cell_backward(
                params, grads, f"enc{l}", dh, dc_e[l], trace.enc_caches[t][l]
            )
            dh_e[l] = dh_prev
            dc_e[l] = dc_prev
    return grads


def policy_grad_from_logp(trace: ForwardTrace, dlogp: np.ndarray) -> np.ndarray:
    """Convert a gradient w.r.t. log-probabilities into one w.r.t. logits."""
    probs = np.exp(trace.log_probs)
    return dlogp - probs * dlogp.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# Rollout decoding (no caches)


def decode(params: PolicyParams, cfg: NetConfig, embeddings: np.ndarray,
           per_dag: int, rng: np.random.Generator | None = None,
           greedy: bool = False):
    """Autoregressive decoding: `per_dag` episodes for each of G DAGs.

    Samples each action from the step policy (argmax with ties to 0 when
    greedy). Returns (actions, chosen log-probs, values, groups); episode
    b = g * per_dag + k belongs to DAG g.
    """
    if not greedy and rng is None:
        raise ProtocolError("sampling decode requires an rng")
    emb = _as_batched(embeddings)
    G, n, _ = emb.shape
    B = G * per_dag
    groups = np.repeat(np.arange(G, dtype=np.int64), per_dag)
    enc_out, enc_h, enc_c, _ = encode(params, cfg, emb)
    we_eb = (enc_out @ params["att_We"].T)[groups]
    eo = enc_out[groups]
    h = [enc_h[l][groups] for l in range(cfg.layers)]
    c = [enc_c[l][groups] for l in range(cfg.layers)]

    actions = np.zeros((B, n), dtype=np.int64)
    logps = np.zeros((B, n))
    values = np.zeros((B, n))
    prev = np.zeros(B, dtype=np.int64)  # start token rows
    for j in range(n):
        _, ctx, _ = _attention_forward(params, h[-1], eo, we_eb)
        x = np.concatenate([params["act_emb"][prev], ctx], axis=-1)
        for l in range(cfg.layers):
            h[l], c[l], _ = _cell_forward(params, f"dec{l}", x, h[l], c[l])
            x = h[l]
        lg, _ = _head_forward(params, "pol", h[-1])
        vv, _ = _head_forward(params, "val", h[-1])
        logp = _log_softmax(lg)
        if greedy:
            a = (logp[:, 1] > logp[:, 0]).astype(np.int64)
        else:
            a = (rng.random(B) < np.exp(logp[:, 1])).astype(np.int64)
        actions[:, j] = a
        logps[:, j] = logp[np.arange(B), a]
        values[:, j] = vv[:, 0]
        prev = a + 1
    return actions, logps, values, groups


def sample_action(trace: ForwardTrace, step: int, rng: np.random.Generator,
                  episode: int = 0) -> tuple[int, float]:
    """Draw one action from the cached step policy; returns (action, logp)."""
    logp = trace.log_probs[episode, step]
    a = int(rng.random() < np.exp(logp[1]))
    return a, float(logp[a])


def greedy_action(trace: ForwardTrace, step: int, episode: int = 0) -> int:
    logp = trace.log_probs[episode, step]
    return int(logp[1] > logp[0])
