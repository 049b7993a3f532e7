"""Dual-stream SE(3)-equivariant encoder and canonical frame construction.

Scalars ``h`` (N x C) are rotation invariant; vectors ``v`` (N x C x 3) rotate
with the input.  Two axes are pooled from ``v`` with invariant softmax
weights and orthonormalized into a right-handed frame ``Q``; canonical
coordinates are ``Q^T (x - centroid)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from .geom import MolecularConfiguration, centroid
from .tensor import NonFiniteError, Tensor

PREFIX = "encoder"


@dataclass(frozen=True)
class EncoderConfig:
    channels: int = 32
    layers: int = 3
    rbf: int = 16
    rbf_max: float = 6.0
    z_max: int = 100
    embedding_dim: int = 32
    knn: int = 8
    full_graph_max: int = 32

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("encoder needs at least one message-passing layer")


@dataclass
class EncoderParams:
    config: EncoderConfig
    tensors: dict

    def __getitem__(self, key: str) -> Tensor:
        return self.tensors[f"{PREFIX}/{key}"]

    def get(self, key: str):
        return self.tensors.get(f"{PREFIX}/{key}")


@dataclass
class CanonicalFrame:
    """Rotation ``Q`` (columns q1, q2, q3) and the centroid it is anchored at."""

    Q: Tensor
    centroid: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.Q.data

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.Q.data), np.array(self.centroid)


def init_encoder_params(config: EncoderConfig, seed) -> EncoderParams:
    rng = np.random.default_rng(seed)
    C = config.channels
    p: dict[str, Tensor] = {}
    p[f"{PREFIX}/embed"] = nn.param(rng.normal(0.0, 1.0, size=(config.z_max, C)), f"{PREFIX}/embed")
    p.update(nn.init_linear(rng, f"{PREFIX}/rbf", config.rbf, C))
    p.update(nn.init_mlp(rng, f"{PREFIX}/psi", [2 * C, C, C]))
    for layer in range(config.layers):
        q = f"{PREFIX}/layer{layer}"
        p[f"{q}/Wv"] = nn.param(nn.glorot(rng, C, C), f"{q}/Wv")
        p.update(nn.init_mlp(rng, f"{q}/gate", [3 * C, C, C]))
        p.update(nn.init_mlp(rng, f"{q}/msg", [3 * C, C, C]))
        p.update(nn.init_mlp(rng, f"{q}/upd", [2 * C, C, C]))
    p.update(nn.init_mlp(rng, f"{PREFIX}/alpha", [C, C, 2]))
    p[f"{PREFIX}/mix"] = nn.param(nn.glorot(rng, C, 2), f"{PREFIX}/mix")
    p.update(nn.init_mlp(rng, f"{PREFIX}/pool", [C, C, config.embedding_dim]))
    return EncoderParams(config, p)


def neighbor_edges(X: np.ndarray, config: EncoderConfig) -> tuple[np.ndarray, np.ndarray]:
    """Directed edges (i receives from j): full graph up to ``full_graph_max`` atoms, else kNN."""
    n = len(X)
    if n <= 1:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if n <= config.full_graph_max:
        i, j = np.nonzero(~np.eye(n, dtype=bool))
        return i, j
    d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    k = min(config.knn, n - 1)
    nbrs = np.argsort(d, axis=1, kind="stable")[:, :k]
    return np.repeat(np.arange(n), k), nbrs.reshape(-1)


def rbf_features(d: np.ndarray, config: EncoderConfig) -> np.ndarray:
    centers = np.linspace(0.0, config.rbf_max, config.rbf)
    width = centers[1] - centers[0] if config.rbf > 1 else config.rbf_max
    return np.exp(-(((d[:, None] - centers[None, :]) / width) ** 2))


def encoder_forward(params: EncoderParams, config: MolecularConfiguration) -> tuple[Tensor, Tensor]:
    """Return invariant scalars ``h`` (N x C) and equivariant vectors ``v`` (N x C x 3)."""
    h, v = _encode_internal(params, config)
    return h, T.transpose(v, (0, 2, 1))


def _encode_internal(params: EncoderParams, mol: MolecularConfiguration) -> tuple[Tensor, Tensor]:
    cfg = params.config
    C = cfg.channels
    X = mol.coords - centroid(mol.coords)
    n = len(X)
    if (mol.numbers > cfg.z_max).any():
        raise ValueError(f"atomic number above the embedding table size {cfg.z_max}")
    ei, ej = neighbor_edges(X, cfg)
    n_edges = len(ei)

    h = params["embed"][mol.numbers - 1]
    if n_edges:
        # messages are averaged over each receiver's neighbours
        inv_deg = 1.0 / np.bincount(ei, minlength=n)[ei]
        w3 = T.constant(inv_deg.reshape(n_edges, 1, 1))
        w2 = T.constant(inv_deg.reshape(n_edges, 1))
        rel = X[ej] - X[ei]
        dist = np.linalg.norm(rel, axis=1)
        unit = T.constant(rel / dist[:, None])
        e = nn.linear(params.tensors, f"{PREFIX}/rbf", T.constant(rbf_features(dist, cfg)))
        psi = nn.mlp(params.tensors, f"{PREFIX}/psi", T.concat([h[ei], h[ej]], axis=1), 2)
        # vectors are carried as (N, 3, C) so channel mixing is a right matmul
        contrib = T.reshape(unit, (n_edges, 3, 1)) * T.reshape(psi, (n_edges, 1, C))
        v = T.scatter_add(contrib * w3, ei, (n, 3, C))
    else:
        v = T.zeros((n, 3, C))

    for layer in range(cfg.layers):
        q = f"{PREFIX}/layer{layer}"
        try:
            v_new = T.matmul(v, params[f"layer{layer}/Wv"])
            if n_edges:
                pair = T.concat([h[ei], h[ej], e], axis=1)
                eta = nn.mlp(params.tensors, f"{q}/gate", pair, 2)
                v_new = v_new + T.scatter_add(T.reshape(eta, (n_edges, 1, C)) * v[ej] * w3, ei, (n, 3, C))
                msg = nn.mlp(params.tensors, f"{q}/msg", pair, 2)
                agg = T.scatter_add(msg * w2, ei, (n, C))
            else:
                agg = T.zeros((n, C))
            norms = T.sqrt(T.tsum(v_new * v_new, axis=1) + 1e-12)
            h = h + nn.mlp(params.tensors, f"{q}/upd", T.concat([agg, norms], axis=1), 2)
            v = v_new
        except NonFiniteError as exc:
            raise NonFiniteError(f"encoder layer {layer}: {exc}") from exc
    return h, v


def aggregate_axes(params: EncoderParams, h: Tensor, v: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """Pool two equivariant axes ``u1, u2`` from per-atom vectors.

    ``v`` is N x C x 3.  Returns ``(u1, u2, alpha)`` with ``alpha`` the N x 2
    softmax weights (each column sums to one).
    """
    alpha = T.softmax(nn.mlp(params.tensors, f"{PREFIX}/alpha", h, 2), axis=0)
    return _axes_from(params, T.transpose(v, (0, 2, 1)), alpha) + (alpha,)


def _axes_from(params: EncoderParams, v_n3c: Tensor, alpha: Tensor) -> tuple[Tensor, Tensor]:
    n = v_n3c.shape[0]
    mixed = T.matmul(v_n3c, params["mix"])  # N x 3 x 2
    u = T.tsum(mixed * T.reshape(alpha, (n, 1, 2)), axis=0)  # 3 x 2
    return u[:, 0], u[:, 1]


def _normalize(u: Tensor, eps: float) -> Tensor:
    norm = T.l2_norm(u)
    return u / norm if norm.data > eps else u * (1.0 / eps)


def gram_schmidt_frame(u1, u2, eps: float = 1e-8, degenerate_tol: float = 1e-6) -> Tensor:
    """Right-handed orthonormal frame from two axes (columns q1, q2, q1 x q2).

    Falls back to the identity when ``u1`` vanishes and to the first standard
    basis vector not parallel to ``q1`` when ``u2`` has no orthogonal part.
    """
    u1 = T.as_tensor(u1)
    u2 = T.as_tensor(u2)
    if np.linalg.norm(u1.data) < degenerate_tol:
        return T.constant(np.eye(3))
    q1 = _normalize(u1, eps)
    u2_perp = u2 - T.tsum(u2 * q1) * q1
    if np.linalg.norm(u2_perp.data) < degenerate_tol:
        q1v = q1.data / np.linalg.norm(q1.data)
        for k in range(3):
            if abs(q1v[k]) < 1.0 - 1e-6:
                e_k = T.constant(np.eye(3)[k])
                u2_perp = e_k - T.tsum(e_k * q1) * q1
                break
    q2 = _normalize(u2_perp, eps)
    q3 = T.cross(q1, q2)
    return T.stack([q1, q2, q3], axis=1)


def canonical_coords(frame: CanonicalFrame, x) -> Tensor:
    """Row-wise ``Q^T (x - centroid)`` for a single point or an M x 3 batch."""
    x = T.as_tensor(x)
    single = x.ndim == 1
    pts = T.reshape(x, (1, 3)) if single else x
    out = T.matmul(pts - T.constant(frame.centroid), frame.Q)
    return T.reshape(out, (3,)) if single else out


def encode_molecule(params: EncoderParams, mol: MolecularConfiguration, frame_mode: str = "learned",
                    frame_seed: int = 0) -> tuple[Tensor, CanonicalFrame]:
    """Invariant molecule embedding plus canonical frame.

    ``frame_mode`` supports ablations: ``"learned"`` (default), ``"identity"``
    (no canonicalization, raw world coordinates) and ``"random"`` (a fixed
    random rotation about the centroid).
    """
    h, v = _encode_internal(params, mol)
    pooled = T.mean(h, axis=0, keepdims=True)
    embedding = T.reshape(nn.mlp(params.tensors, f"{PREFIX}/pool", pooled, 2), (params.config.embedding_dim,))
    if frame_mode == "learned":
        alpha = T.softmax(nn.mlp(params.tensors, f"{PREFIX}/alpha", h, 2), axis=0)
        u1, u2 = _axes_from(params, v, alpha)
        frame = CanonicalFrame(gram_schmidt_frame(u1, u2), centroid(mol.coords))
    elif frame_mode == "identity":
        frame = CanonicalFrame(T.constant(np.eye(3)), np.zeros(3))
    elif frame_mode == "random":
        from .geom import random_rotation

        frame = CanonicalFrame(T.constant(random_rotation(frame_seed).R), centroid(mol.coords))
    else:
        raise ValueError(f"unknown frame mode {frame_mode!r}")
    return embedding, frame


# ---------------------------------------------------------------------------
# batched numpy route for frames of many poses of one molecule


def _softplus_np(x: np.ndarray) -> np.ndarray:
    # stable form; about twice as fast as logaddexp(0, x)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _mlp_np(p: dict, prefix: str, x: np.ndarray, n_layers: int = 2) -> np.ndarray:
    for k in range(n_layers):
        x = x @ p[f"{prefix}/{k}/W"] + p[f"{prefix}/{k}/b"]
        if k < n_layers - 1:
            x = _softplus_np(x)
    return x


def _gram_schmidt_np(u1: np.ndarray, u2: np.ndarray, eps: float = 1e-8, degenerate_tol: float = 1e-6) -> np.ndarray:
    n1 = np.linalg.norm(u1)
    if n1 < degenerate_tol:
        return np.eye(3)
    q1 = u1 / n1 if n1 > eps else u1 / eps
    perp = u2 - (u2 @ q1) * q1
    if np.linalg.norm(perp) < degenerate_tol:
        q1v = q1 / np.linalg.norm(q1)
        for k in range(3):
            if abs(q1v[k]) < 1.0 - 1e-6:
                perp = np.eye(3)[k] - q1[k] * q1
                break
    n2 = np.linalg.norm(perp)
    q2 = perp / n2 if n2 > eps else perp / eps
    return np.stack([q1, q2, np.cross(q1, q2)], axis=1)


def _gram_schmidt_batch(u1: np.ndarray, u2: np.ndarray, degenerate_tol: float = 1e-6) -> np.ndarray:
    """Row-wise frames for B x 3 axis pairs; degenerate rows go through the scalar path."""
    n1 = np.linalg.norm(u1, axis=1, keepdims=True)
    q1 = u1 / np.maximum(n1, 1e-8)
    perp = u2 - np.sum(u2 * q1, axis=1, keepdims=True) * q1
    n2 = np.linalg.norm(perp, axis=1, keepdims=True)
    q2 = perp / np.maximum(n2, 1e-8)
    out = np.stack([q1, q2, np.cross(q1, q2)], axis=2)
    for b in np.nonzero((n1[:, 0] < degenerate_tol) | (n2[:, 0] < degenerate_tol))[0]:
        out[b] = _gram_schmidt_np(u1[b], u2[b])
    return out


def _pair_mlp_np(p: dict, prefix: str, h: np.ndarray, ei, ej, extra=None) -> np.ndarray:
    """Two-layer MLP on ``[h_i, h_j, extra]`` per edge, with the first layer applied
    per node before gathering (same sums, far fewer multiplications)."""
    W, b = p[f"{prefix}/0/W"], p[f"{prefix}/0/b"]
    C = h.shape[-1]
    x = (h @ W[:C])[:, ei] + (h @ W[C:2 * C])[:, ej] + b
    if extra is not None:
        x = x + extra @ W[2 * C:]
    return _softplus_np(x) @ p[f"{prefix}/1/W"] + p[f"{prefix}/1/b"]


def frames_batch(params: EncoderParams, numbers, coords: np.ndarray) -> np.ndarray:
    """Learned frames ``Q`` (B x 3 x 3) for B poses (B x N x 3) of one molecule.

    Plain numpy evaluation of the same computation as :func:`encode_molecule`,
    used where thousands of frames are needed (e.g. equivariance sweeps).
    The neighbour graph is taken from the first pose.
    """
    cfg = params.config
    C = cfg.channels
    p = {k: np.asarray(v.data) for k, v in params.tensors.items()}
    numbers = np.asarray(numbers, dtype=np.int64)
    X = np.asarray(coords, dtype=np.float64)
    X = X - X.mean(axis=1, keepdims=True)
    B, n, _ = X.shape
    ei, ej = neighbor_edges(X[0], cfg)
    n_edges = len(ei)
    h = np.repeat(p[f"{PREFIX}/embed"][numbers - 1][None], B, axis=0)
    v = np.zeros((B, n, 3, C))
    # receiver incidence matrix with 1/degree weights: the neighbour means become matmuls
    S = np.zeros((n, n_edges))
    if n_edges:
        S[ei, np.arange(n_edges)] = 1.0 / np.bincount(ei, minlength=n)[ei]

    def scatter(vals):
        flat = vals.reshape(B, n_edges, -1)
        return (S @ flat).reshape((B, n) + vals.shape[2:])

    if n_edges:
        rel = X[:, ej] - X[:, ei]
        dist = np.linalg.norm(rel, axis=2)
        unit = rel / dist[..., None]
        e = rbf_features(dist.reshape(-1), cfg).reshape(B, n_edges, -1) @ p[f"{PREFIX}/rbf/W"] + p[f"{PREFIX}/rbf/b"]
        psi = _pair_mlp_np(p, f"{PREFIX}/psi", h, ei, ej)
        v = scatter(unit[..., None] * psi[:, :, None, :])
    for layer in range(cfg.layers):
        q = f"{PREFIX}/layer{layer}"
        v_new = v @ p[f"{q}/Wv"]
        agg = np.zeros((B, n, C))
        if n_edges:
            eta = _pair_mlp_np(p, f"{q}/gate", h, ei, ej, e)
            v_new = v_new + scatter(eta[:, :, None, :] * v[:, ej])
            agg = scatter(_pair_mlp_np(p, f"{q}/msg", h, ei, ej, e))
        norms = np.sqrt(np.sum(v_new * v_new, axis=2) + 1e-12)
        h = h + _mlp_np(p, f"{q}/upd", np.concatenate([agg, norms], axis=2))
        v = v_new
    logits = _mlp_np(p, f"{PREFIX}/alpha", h)
    logits = logits - logits.max(axis=1, keepdims=True)
    alpha = np.exp(logits)
    alpha /= alpha.sum(axis=1, keepdims=True)
    u = np.sum((v @ p[f"{PREFIX}/mix"]) * alpha[:, :, None, :], axis=1)  # B x 3 x 2
    return _gram_schmidt_batch(u[:, :, 0], u[:, :, 1])
