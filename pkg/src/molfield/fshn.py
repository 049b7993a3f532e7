"""Autoregressive hyper-network that writes field parameters token by token.

A causal transformer reads ``[condition, start, embed(token_1), ...]`` and
its hidden state at position ``t`` is projected (one projection per
(layer, role) group) into the payload of token ``t``.  That payload is fed
back as the next input, so training and inference decode identically.

Two interchangeable routes compute the same function:

* ``engine="fused"``: one autodiff node whose forward decodes incrementally
  in numpy and whose backward runs reverse-mode through the sequence by hand.
  This is the fast path used for training.
* ``engine="graph"``: re-runs the parallel masked decoder built from
  ordinary tensor ops once per emitted token.  Slow, but independent; the
  tests compare both routes value-for-value and gradient-for-gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from . import tensor as T
from .cinr import FieldArchitecture, FieldParameters, init_field_params
from .swt import (
    ROLES,
    StructuralEmbeddings,
    detokenize_tensor,
    init_structural_embeddings,
    padding_mask,
    structural_rows,
    token_layout,
    tokenize,
)
from .tensor import ShapeError, Tensor

PREFIX = "fshn"
MASK_VALUE = -1e30
LN_EPS = 1e-5


@dataclass(frozen=True)
class HyperNetConfig:
    d_model: int = 128
    heads: int = 4
    layers: int = 2
    ff: int = 256
    d_chunk: int = 64
    fourier: int = 8
    gaussian_head: bool = True
    structural: bool = True
    autoregressive: bool = True
    pos_scale: float = 0.02
    proj_scale: float = 0.1

    def __post_init__(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        if self.layers < 1 or self.d_chunk < 1:
            raise ValueError("need at least one decoder block and d_chunk >= 1")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads


HYPERNET_PRESETS = {
    "tiny": HyperNetConfig(d_model=16, heads=2, layers=1, ff=32, d_chunk=16, fourier=4),
    "desk": HyperNetConfig(d_model=128, heads=4, layers=2, ff=256, d_chunk=64, fourier=8),
    "paper": HyperNetConfig(d_model=512, heads=8, layers=6, ff=2048, d_chunk=64, fourier=32),
}


@dataclass
class Condition:
    z: Tensor
    provenance: str

    @property
    def dim(self) -> int:
        return self.z.shape[0]


def time_fourier(t: float, k_f: int) -> np.ndarray:
    """Interleaved ``[sin(2 pi t 2^j), cos(2 pi t 2^j)]`` for ``j < k_f``."""
    if k_f < 1:
        raise ValueError("k_f must be at least 1")
    ang = 2.0 * np.pi * float(t) * 2.0 ** np.arange(k_f)
    return np.stack([np.sin(ang), np.cos(ang)], axis=1).reshape(-1)


def build_condition(mode: str, embedding=None, t=None, seed=None, fourier: int = 8, dim: int | None = None) -> Condition:
    if mode == "dynamics":
        if embedding is None or t is None:
            raise ValueError("dynamics condition needs an embedding and a time")
        z = T.concat([T.as_tensor(embedding), T.constant(time_fourier(t, fourier))], axis=0)
        return Condition(z, "molecule+time")
    if mode == "property":
        if embedding is None:
            raise ValueError("property condition needs an embedding")
        return Condition(T.as_tensor(embedding), "molecule")
    if mode == "generation":
        if seed is None or dim is None:
            raise ValueError("generation condition needs a seed and a dimension")
        return Condition(T.constant(np.random.default_rng(seed).standard_normal(dim)), "gaussian")
    raise ValueError(f"unknown condition mode {mode!r}")


def condition_dim(mode: str, embedding_dim: int, fourier: int, latent_dim: int | None = None) -> int:
    if mode == "dynamics":
        return embedding_dim + 2 * fourier
    if mode == "generation" and latent_dim is not None:
        return latent_dim
    return embedding_dim


# ---------------------------------------------------------------------------
# parameters


def _groups(arch: FieldArchitecture):
    for l, (a, b) in enumerate(arch.layer_shapes()):
        yield l, "weight", a, b
        yield l, "bias", a, b


def init_hypernet(cfg: HyperNetConfig, arch: FieldArchitecture, d_z: int, seed,
                  base: FieldParameters | None = None) -> dict[str, Tensor]:
    """Hyper-network parameters (``fshn/`` prefix) plus structural embeddings (``swt/``).

    ``base`` is the field the per-token base payloads start from; a Glorot
    field is drawn when it is omitted.
    """
    rng = np.random.default_rng(seed)
    d, ff = cfg.d_model, cfg.ff
    n_tokens = len(token_layout(arch, cfg.d_chunk))
    p: dict[str, Tensor] = {}
    p.update(nn.init_linear(rng, f"{PREFIX}/cond", d_z, d))
    p[f"{PREFIX}/sos"] = nn.param(rng.normal(0.0, 1.0, size=d), f"{PREFIX}/sos")
    p[f"{PREFIX}/pos"] = nn.param(rng.normal(0.0, cfg.pos_scale, size=(n_tokens + 1, d)), f"{PREFIX}/pos")
    for k in range(cfg.layers):
        q = f"{PREFIX}/block{k}"
        for ln in ("ln1", "ln2"):
            p[f"{q}/{ln}/g"] = nn.param(np.ones(d), f"{q}/{ln}/g")
            p[f"{q}/{ln}/b"] = nn.param(np.zeros(d), f"{q}/{ln}/b")
        for name in ("Wq", "Wk", "Wv", "Wo"):
            p[f"{q}/{name}"] = nn.param(nn.glorot(rng, d, d), f"{q}/{name}")
        p[f"{q}/bo"] = nn.param(np.zeros(d), f"{q}/bo")
        p.update(nn.init_linear(rng, f"{q}/ff/0", d, ff))
        p.update(nn.init_linear(rng, f"{q}/ff/1", ff, d))
    p[f"{PREFIX}/lnf/g"] = nn.param(np.ones(d), f"{PREFIX}/lnf/g")
    p[f"{PREFIX}/lnf/b"] = nn.param(np.zeros(d), f"{PREFIX}/lnf/b")
    for l, role, a, b in _groups(arch):
        # layer-normed hiddens have unit RMS, so with proj_scale = 1 the
        # projected weights would sit at Glorot scale; the conditional part
        # starts smaller and rides on a per-token base payload
        std = cfg.proj_scale * (np.sqrt(2.0 / (a + b)) if role == "weight" else 0.01)
        key = f"{PREFIX}/proj/{l}/{role}"
        p[f"{key}/W"] = nn.param(rng.normal(0.0, std / np.sqrt(d), size=(d, cfg.d_chunk)), f"{key}/W")
        p[f"{key}/b"] = nn.param(np.zeros(cfg.d_chunk), f"{key}/b")
    if base is None:
        base = init_field_params(arch, rng.integers(2**63), requires_grad=False)
    p[f"{PREFIX}/base"] = nn.param(tokenize(base, arch, cfg.d_chunk).payloads(), f"{PREFIX}/base")
    if cfg.gaussian_head:
        p[f"{PREFIX}/logvar/W"] = nn.param(rng.normal(0.0, 0.01, size=(d, cfg.d_chunk)), f"{PREFIX}/logvar/W")
        p[f"{PREFIX}/logvar/b"] = nn.param(np.full(cfg.d_chunk, -6.0), f"{PREFIX}/logvar/b")
    p.update(init_structural_embeddings(arch, cfg.d_chunk, d, rng.integers(2**63)).tensors())
    return p


class _Plan:
    """Static bookkeeping for one (arch, d_chunk): slots, groups, masks."""

    def __init__(self, arch: FieldArchitecture, d_chunk: int):
        self.arch = arch
        self.d_chunk = d_chunk
        self.slots = token_layout(arch, d_chunk)
        self.n_tokens = len(self.slots)
        self.mask = padding_mask(arch, d_chunk)
        self.group_keys = [f"{PREFIX}/proj/{l}/{role}" for l, role, _, _ in _groups(arch)]
        index = {(l, role): i for i, (l, role, _, _) in enumerate(_groups(arch))}
        self.group_of = np.array([index[(s.layer, s.role)] for s in self.slots], dtype=np.int64)


_PLANS: dict = {}


def _plan(arch: FieldArchitecture, d_chunk: int) -> _Plan:
    key = (arch, d_chunk)
    if key not in _PLANS:
        _PLANS[key] = _Plan(arch, d_chunk)
    return _PLANS[key]


def _check(params, cfg: HyperNetConfig, plan: _Plan, d_z: int):
    pos = params[f"{PREFIX}/pos"]
    if pos.shape[0] != plan.n_tokens + 1:
        raise ShapeError(f"positional table has {pos.shape[0]} rows, architecture needs {plan.n_tokens + 1}")
    for key in plan.group_keys:
        if f"{key}/W" not in params or params[f"{key}/W"].shape != (cfg.d_model, plan.d_chunk):
            raise ShapeError(f"missing or mis-shaped projection {key}")
    if params[f"{PREFIX}/cond/W"].shape[0] != d_z:
        raise ShapeError(f"condition has {d_z} entries, projection expects {params[f'{PREFIX}/cond/W'].shape[0]}")


def _structure(params, cfg: HyperNetConfig, plan: _Plan) -> Tensor:
    if not cfg.structural:
        return T.zeros((plan.n_tokens, cfg.d_model))
    return structural_rows(plan.slots, StructuralEmbeddings.from_params(params))


# ---------------------------------------------------------------------------
# parallel masked decoder (tensor ops)


def _attention_block(params, cfg: HyperNetConfig, k: int, X: Tensor, mask: np.ndarray) -> Tensor:
    q = f"{PREFIX}/block{k}"
    P, d, H, dh = X.shape[0], cfg.d_model, cfg.heads, cfg.head_dim
    a = T.layer_norm(X, params[f"{q}/ln1/g"], params[f"{q}/ln1/b"], LN_EPS)
    Q = T.transpose(T.reshape(T.matmul(a, params[f"{q}/Wq"]), (P, H, dh)), (1, 0, 2))
    K = T.transpose(T.reshape(T.matmul(a, params[f"{q}/Wk"]), (P, H, dh)), (1, 2, 0))
    V = T.transpose(T.reshape(T.matmul(a, params[f"{q}/Wv"]), (P, H, dh)), (1, 0, 2))
    scores = T.matmul(Q, K) * (1.0 / np.sqrt(dh)) + T.constant(mask)
    att = T.matmul(T.softmax(scores, axis=-1), V)
    o = T.reshape(T.transpose(att, (1, 0, 2)), (P, d))
    X = X + T.matmul(o, params[f"{q}/Wo"]) + params[f"{q}/bo"]
    a2 = T.layer_norm(X, params[f"{q}/ln2/g"], params[f"{q}/ln2/b"], LN_EPS)
    return X + nn.mlp(params, f"{q}/ff", a2, 2)


def decoder_forward(params, cfg: HyperNetConfig, arch: FieldArchitecture, z, payload_inputs=None) -> Tensor:
    """Causal decoder over a given input sequence; returns the T x d_model hiddens.

    ``payload_inputs`` holds the payloads fed back as inputs (rows 0..T-2 are
    used).  ``None`` drops payload feedback entirely, which is the
    non-autoregressive ablation.
    """
    plan = _plan(arch, cfg.d_chunk)
    z = T.as_tensor(z)
    _check(params, cfg, plan, z.shape[0])
    n = plan.n_tokens
    S = _structure(params, cfg, plan)
    cond = T.reshape(T.matmul(T.reshape(z, (1, -1)), params[f"{PREFIX}/cond/W"]) + params[f"{PREFIX}/cond/b"],
                     (1, cfg.d_model))
    rows = [cond, T.reshape(params[f"{PREFIX}/sos"], (1, cfg.d_model))]
    if n > 1:
        tok = S[:n - 1]
        if payload_inputs is not None:
            pay = T.as_tensor(payload_inputs)
            if pay.shape[1] != cfg.d_chunk or pay.shape[0] < n - 1:
                raise ShapeError(f"payload inputs must be at least {(n - 1, cfg.d_chunk)}, got {pay.shape}")
            tok = tok + T.matmul(pay[:n - 1], params["swt/w_payload"])
        rows.append(tok)
    X = T.concat(rows, axis=0) + params[f"{PREFIX}/pos"]
    P = n + 1
    mask = np.triu(np.full((P, P), MASK_VALUE), k=1)
    for k in range(cfg.layers):
        X = _attention_block(params, cfg, k, X, mask)
    Xf = T.layer_norm(X, params[f"{PREFIX}/lnf/g"], params[f"{PREFIX}/lnf/b"], LN_EPS)
    return Xf[1:]


def _project(params, plan: _Plan, hiddens: Tensor) -> Tensor:
    """Per-group projection of hiddens to masked payloads (T x d_chunk)."""
    W = T.stack([params[f"{k}/W"] for k in plan.group_keys], axis=0)[plan.group_of]
    b = T.stack([params[f"{k}/b"] for k in plan.group_keys], axis=0)[plan.group_of]
    n = plan.n_tokens
    raw = T.reshape(T.matmul(T.reshape(hiddens, (n, 1, -1)), W), (n, plan.d_chunk)) + b + params[f"{PREFIX}/base"]
    return raw * T.constant(plan.mask)


# ---------------------------------------------------------------------------
# fused incremental decoder


def _fused_names(cfg: HyperNetConfig, plan: _Plan) -> list[str]:
    names = [f"{PREFIX}/cond/W", f"{PREFIX}/cond/b", f"{PREFIX}/sos", f"{PREFIX}/pos", "swt/w_payload"]
    for k in range(cfg.layers):
        q = f"{PREFIX}/block{k}"
        names += [f"{q}/ln1/g", f"{q}/ln1/b", f"{q}/Wq", f"{q}/Wk", f"{q}/Wv", f"{q}/Wo", f"{q}/bo",
                  f"{q}/ln2/g", f"{q}/ln2/b", f"{q}/ff/0/W", f"{q}/ff/0/b", f"{q}/ff/1/W", f"{q}/ff/1/b"]
    names += [f"{PREFIX}/lnf/g", f"{PREFIX}/lnf/b"]
    for key in plan.group_keys:
        names += [f"{key}/W", f"{key}/b"]
    names.append(f"{PREFIX}/base")
    return names


def _stack(params, cfg: HyperNetConfig, suffix: str) -> np.ndarray:
    return np.ascontiguousarray(np.stack([params[f"{PREFIX}/block{k}/{suffix}"].data for k in range(cfg.layers)]))


def _fused_decode(params, cfg: HyperNetConfig, plan: _Plan, z: Tensor, S: Tensor, noise=None) -> Tensor:
    """Incremental decode; returns a T x (d_chunk + d_model) node [payloads | hiddens]."""
    from . import _decode_kernels as K

    names = _fused_names(cfg, plan)
    d, dc, H = cfg.d_model, plan.d_chunk, cfg.heads
    arr = {n: params[n].data for n in names}
    pos = arr[f"{PREFIX}/pos"]
    x0 = z.data @ arr[f"{PREFIX}/cond/W"] + arr[f"{PREFIX}/cond/b"] + pos[0]
    x1 = arr[f"{PREFIX}/sos"] + pos[1]
    blk = {sfx: _stack(params, cfg, sfx) for sfx in
           ("ln1/g", "ln1/b", "Wq", "Wk", "Wv", "Wo", "bo", "ln2/g", "ln2/b", "ff/0/W", "ff/0/b", "ff/1/W", "ff/1/b")}
    Wg = np.ascontiguousarray(np.stack([arr[f"{k}/W"] for k in plan.group_keys]))
    bg = np.ascontiguousarray(np.stack([arr[f"{k}/b"] for k in plan.group_keys]))
    use_noise = noise is not None
    if use_noise:
        Wlv, blv = params[f"{PREFIX}/logvar/W"].data, params[f"{PREFIX}/logvar/b"].data
    else:
        noise, Wlv, blv = np.zeros((1, dc)), np.zeros((d, dc)), np.zeros(dc)
    saved = K.forward(
        x0, x1, pos, np.ascontiguousarray(S.data), arr["swt/w_payload"],
        blk["ln1/g"], blk["ln1/b"], blk["Wq"], blk["Wk"], blk["Wv"], blk["Wo"], blk["bo"],
        blk["ln2/g"], blk["ln2/b"], blk["ff/0/W"], blk["ff/0/b"], blk["ff/1/W"], blk["ff/1/b"],
        arr[f"{PREFIX}/lnf/g"], arr[f"{PREFIX}/lnf/b"], Wg, bg, arr[f"{PREFIX}/base"], plan.group_of, plan.mask,
        noise, Wlv, blv, use_noise, H)
    (xh1, inv1, a1, Qh, Kh, Vh, att, attT, o_cat, xh2, inv2, a2, u, s, xhf, invf, hid, pay) = saved
    out = np.concatenate([pay, hid], axis=1)
    if use_noise:
        return T.constant(out)
    P = plan.n_tokens + 1

    def vjp_np(g, needs):
        g = np.ascontiguousarray(g)
        dpay, dXin, dHf, dQ, dK, dV, dA1, dXmid, dA2, dU, dXout = K.backward(
            np.ascontiguousarray(g[:, :dc]), np.ascontiguousarray(g[:, dc:]), plan.mask, plan.group_of, Wg,
            arr[f"{PREFIX}/lnf/g"], xhf, invf, arr["swt/w_payload"],
            blk["ln1/g"], blk["Wq"], blk["Wk"], blk["Wv"], blk["Wo"], blk["ln2/g"], blk["ff/0/W"], blk["ff/1/W"],
            xh1, inv1, Qh, Kh, Vh, att, attT, xh2, inv2, u)
        grads: dict[str, np.ndarray] = {
            f"{PREFIX}/cond/W": np.outer(z.data, dXin[0]),
            f"{PREFIX}/cond/b": dXin[0].copy(),
            f"{PREFIX}/sos": dXin[1].copy(),
            f"{PREFIX}/pos": dXin,
            "swt/w_payload": pay[:P - 2].T @ dXin[2:],
        }
        for k in range(cfg.layers):
            q = f"{PREFIX}/block{k}"
            grads[f"{q}/ff/1/W"] = s[k].T @ dXout[k]
            grads[f"{q}/ff/1/b"] = dXout[k].sum(axis=0)
            grads[f"{q}/ff/0/W"] = a2[k].T @ dU[k]
            grads[f"{q}/ff/0/b"] = dU[k].sum(axis=0)
            grads[f"{q}/ln2/g"] = (dA2[k] * xh2[k]).sum(axis=0)
            grads[f"{q}/ln2/b"] = dA2[k].sum(axis=0)
            grads[f"{q}/Wo"] = o_cat[k].T @ dXmid[k]
            grads[f"{q}/bo"] = dXmid[k].sum(axis=0)
            grads[f"{q}/Wq"] = a1[k].T @ dQ[k]
            grads[f"{q}/Wk"] = a1[k].T @ dK[k]
            grads[f"{q}/Wv"] = a1[k].T @ dV[k]
            grads[f"{q}/ln1/g"] = (dA1[k] * xh1[k]).sum(axis=0)
            grads[f"{q}/ln1/b"] = dA1[k].sum(axis=0)
        grads[f"{PREFIX}/lnf/g"] = (dHf[1:] * xhf[1:]).sum(axis=0)
        grads[f"{PREFIX}/lnf/b"] = dHf[1:].sum(axis=0)
        for gi, key in enumerate(plan.group_keys):
            sel = plan.group_of == gi
            grads[f"{key}/W"] = hid[sel].T @ dpay[sel]
            grads[f"{key}/b"] = dpay[sel].sum(axis=0)
        grads[f"{PREFIX}/base"] = dpay
        dz = arr[f"{PREFIX}/cond/W"] @ dXin[0]
        dS = np.zeros((plan.n_tokens, d))
        dS[:P - 2] = dXin[2:]
        return (dz, dS) + tuple(grads[n] for n in names)

    return T._node(out, "hypernet_decode", (z, S) + tuple(params[n] for n in names), vjp_np, None)


# ---------------------------------------------------------------------------
# public entry points


@dataclass
class Generated:
    theta: FieldParameters
    hiddens: Tensor
    payloads: Tensor


def generate(params, cfg: HyperNetConfig, arch: FieldArchitecture, z, sample: bool = False, seed=None,
             engine: str = "fused") -> Generated:
    plan = _plan(arch, cfg.d_chunk)
    z = T.as_tensor(z.z if isinstance(z, Condition) else z)
    _check(params, cfg, plan, z.shape[0])
    if sample and not cfg.gaussian_head:
        raise ValueError("sampling needs the Gaussian head")
    if not cfg.autoregressive:
        hiddens = decoder_forward(params, cfg, arch, z, None)
        payloads = _project(params, plan, hiddens)
        if sample:
            payloads = payloads + T.constant(_sample_noise(params, plan, hiddens.data, seed))
    elif engine == "fused":
        S = _structure(params, cfg, plan)
        noise = np.random.default_rng(seed).standard_normal((plan.n_tokens, plan.d_chunk)) if sample else None
        out = _fused_decode(params, cfg, plan, z, S, noise)
        payloads = out[:, :plan.d_chunk]
        hiddens = out[:, plan.d_chunk:]
    elif engine == "graph":
        if sample:
            raise ValueError("the graph engine decodes in mean mode only")
        hiddens, payloads = _graph_decode(params, cfg, arch, plan, z)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    theta = detokenize_tensor(payloads, arch, plan.d_chunk)
    return Generated(theta, hiddens, payloads)


def _sample_noise(params, plan: _Plan, hid: np.ndarray, seed) -> np.ndarray:
    noise = np.random.default_rng(seed).standard_normal((plan.n_tokens, plan.d_chunk))
    lv = hid @ params[f"{PREFIX}/logvar/W"].data + params[f"{PREFIX}/logvar/b"].data
    return np.exp(0.5 * lv) * noise * plan.mask


def _graph_decode(params, cfg, arch, plan: _Plan, z) -> tuple[Tensor, Tensor]:
    rows_h: list[Tensor] = []
    rows_p: list[Tensor] = []
    pad = T.zeros((plan.n_tokens, plan.d_chunk))
    for t in range(plan.n_tokens):
        inputs = T.concat(rows_p + [pad[t:]], axis=0) if rows_p else pad
        h = decoder_forward(params, cfg, arch, z, inputs)[t]
        W = params[f"{plan.group_keys[plan.group_of[t]]}/W"]
        b = params[f"{plan.group_keys[plan.group_of[t]]}/b"]
        raw = T.matmul(T.reshape(h, (1, -1)), W) + b + params[f"{PREFIX}/base"][t:t + 1]
        payload = raw * T.constant(plan.mask[t:t + 1])
        rows_h.append(T.reshape(h, (1, -1)))
        rows_p.append(payload)
    return T.concat(rows_h, axis=0), T.concat(rows_p, axis=0)


def generate_params(params, cfg: HyperNetConfig, arch: FieldArchitecture, z, d_chunk: int | None = None,
                    sample: bool = False, seed=None, engine: str = "fused") -> tuple[FieldParameters, Tensor]:
    """Decode field parameters from a condition; returns ``(theta, hiddens)``."""
    if d_chunk is not None and d_chunk != cfg.d_chunk:
        raise ShapeError(f"hyper-network was built for d_chunk={cfg.d_chunk}, got {d_chunk}")
    g = generate(params, cfg, arch, z, sample=sample, seed=seed, engine=engine)
    return g.theta, g.hiddens


def aggregate_tokens(hiddens) -> Tensor:
    return T.mean(T.as_tensor(hiddens), axis=0)
