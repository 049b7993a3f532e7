"""Structured weight tokenization of field parameters.

Every (layer, role) tensor is flattened row-major and cut into fixed-width
chunks; the last chunk of each tensor is zero padded.  Tokens are ordered by
layer, then weight before bias, then chunk index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from . import tensor as T
from .cinr import FieldArchitecture, FieldParameters
from .tensor import ShapeError, Tensor

PREFIX = "swt"
ROLES = ("weight", "bias")


class TokenizationError(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    payload: np.ndarray
    layer: int
    role: str
    chunk: int

    @property
    def role_index(self) -> int:
        return ROLES.index(self.role)

    def key(self) -> tuple[int, int, int]:
        return (self.layer, self.role_index, self.chunk)


@dataclass(frozen=True)
class Slot:
    """Where one token lives: its tags and how many payload entries are real."""

    layer: int
    role: str
    chunk: int
    n_valid: int
    shape: tuple

    @property
    def role_index(self) -> int:
        return ROLES.index(self.role)


@dataclass
class TokenSequence:
    tokens: list
    arch: FieldArchitecture
    d_chunk: int

    def __len__(self) -> int:
        return len(self.tokens)

    def payloads(self) -> np.ndarray:
        return np.stack([t.payload for t in self.tokens]) if self.tokens else np.zeros((0, self.d_chunk))


def _group_shapes(arch: FieldArchitecture):
    for l, (a, b) in enumerate(arch.layer_shapes()):
        yield l, "weight", (a, b)
        yield l, "bias", (b,)


def token_layout(arch: FieldArchitecture, d_chunk: int) -> list[Slot]:
    """Token slots in sequence order; depends only on the architecture and chunk width."""
    if d_chunk < 1:
        raise ValueError("d_chunk must be at least 1")
    slots = []
    for l, role, shape in _group_shapes(arch):
        size = int(np.prod(shape))
        n_chunks = -(-size // d_chunk)
        for c in range(n_chunks):
            slots.append(Slot(l, role, c, min(d_chunk, size - c * d_chunk), shape))
    return slots


def token_count(arch: FieldArchitecture, d_chunk: int) -> int:
    return len(token_layout(arch, d_chunk))


def padding_mask(arch: FieldArchitecture, d_chunk: int) -> np.ndarray:
    """T x d_chunk array with ones on real payload entries and zeros on padding."""
    slots = token_layout(arch, d_chunk)
    mask = np.zeros((len(slots), d_chunk))
    for t, s in enumerate(slots):
        mask[t, :s.n_valid] = 1.0
    return mask


def tokenize(theta: FieldParameters, arch: FieldArchitecture, d_chunk: int) -> TokenSequence:
    tokens = []
    for l, role, shape in _group_shapes(arch):
        src = theta.weights[l] if role == "weight" else theta.biases[l]
        flat = np.ravel(np.asarray(getattr(src, "data", src), dtype=np.float64))
        if flat.size != int(np.prod(shape)):
            raise ShapeError(f"layer {l} {role}: expected {shape}, got {flat.size} values")
        n_chunks = -(-flat.size // d_chunk)
        padded = np.zeros(n_chunks * d_chunk)
        padded[:flat.size] = flat
        for c, block in enumerate(padded.reshape(n_chunks, d_chunk)):
            tokens.append(Token(block.copy(), l, role, c))
    return TokenSequence(tokens, arch, d_chunk)


def detokenize(seq: TokenSequence) -> FieldParameters:
    """Exact inverse of :func:`tokenize`; rejects misordered or dirty-padded sequences."""
    slots = token_layout(seq.arch, seq.d_chunk)
    if len(seq.tokens) != len(slots):
        raise TokenizationError(f"expected {len(slots)} tokens, got {len(seq.tokens)}")
    groups: dict[tuple[int, str], list[np.ndarray]] = {}
    for t, (tok, slot) in enumerate(zip(seq.tokens, slots)):
        if (tok.layer, tok.role, tok.chunk) != (slot.layer, slot.role, slot.chunk):
            raise TokenizationError(
                f"token {t} tagged ({tok.layer}, {tok.role}, {tok.chunk}), expected "
                f"({slot.layer}, {slot.role}, {slot.chunk})")
        payload = np.asarray(tok.payload, dtype=np.float64)
        if payload.shape != (seq.d_chunk,):
            raise TokenizationError(f"token {t} payload has shape {payload.shape}, expected ({seq.d_chunk},)")
        if np.any(payload[slot.n_valid:] != 0.0):
            raise TokenizationError(f"token {t} has nonzero padding")
        groups.setdefault((slot.layer, slot.role), []).append(payload[:slot.n_valid])
    Ws, bs = [], []
    for l, role, shape in _group_shapes(seq.arch):
        arr = np.concatenate(groups[(l, role)]).reshape(shape)
        (Ws if role == "weight" else bs).append(T.constant(arr))
    return FieldParameters(seq.arch, Ws, bs)


def detokenize_tensor(payloads: Tensor, arch: FieldArchitecture, d_chunk: int) -> FieldParameters:
    """Differentiable inverse for a T x d_chunk payload tensor (padding ignored)."""
    slots = token_layout(arch, d_chunk)
    if tuple(payloads.shape) != (len(slots), d_chunk):
        raise ShapeError(f"payloads must be {(len(slots), d_chunk)}, got {payloads.shape}")
    Ws, bs = [], []
    start = 0
    for l, role, shape in _group_shapes(arch):
        n = -(-int(np.prod(shape)) // d_chunk)
        block = T.reshape(payloads[start:start + n], (n * d_chunk,))
        arr = T.reshape(block[:int(np.prod(shape))], shape)
        (Ws if role == "weight" else bs).append(arr)
        start += n
    return FieldParameters(arch, Ws, bs)


@dataclass
class StructuralEmbeddings:
    e_layer: Tensor
    e_role: Tensor
    w_payload: Tensor

    @property
    def d_model(self) -> int:
        return self.e_layer.shape[1]

    def tensors(self) -> dict[str, Tensor]:
        return {f"{PREFIX}/e_layer": self.e_layer, f"{PREFIX}/e_role": self.e_role,
                f"{PREFIX}/w_payload": self.w_payload}

    @classmethod
    def from_params(cls, params) -> "StructuralEmbeddings":
        return cls(params[f"{PREFIX}/e_layer"], params[f"{PREFIX}/e_role"], params[f"{PREFIX}/w_payload"])


def init_structural_embeddings(arch: FieldArchitecture, d_chunk: int, d_model: int, seed) -> StructuralEmbeddings:
    rng = np.random.default_rng(seed)
    return StructuralEmbeddings(
        nn.param(rng.normal(0.0, 0.02, size=(arch.n_layers, d_model)), f"{PREFIX}/e_layer"),
        nn.param(rng.normal(0.0, 0.02, size=(2, d_model)), f"{PREFIX}/e_role"),
        nn.param(nn.glorot(rng, d_chunk, d_model), f"{PREFIX}/w_payload"),
    )


def structural_rows(slots, emb: StructuralEmbeddings) -> Tensor:
    """e_layer(l_t) + e_role(r_t) for every slot, T x d_model."""
    layers = np.array([s.layer for s in slots], dtype=np.int64)
    roles = np.array([s.role_index for s in slots], dtype=np.int64)
    if len(layers) and layers.max() >= emb.e_layer.shape[0]:
        raise ShapeError(f"layer index {layers.max()} outside embedding table of {emb.e_layer.shape[0]} rows")
    return emb.e_layer[layers] + emb.e_role[roles]


def embed_tokens(seq: TokenSequence, emb: StructuralEmbeddings) -> Tensor:
    """Row t = payload_t @ W_payload + e_layer(l_t) + e_role(r_t)."""
    if emb.w_payload.shape[0] != seq.d_chunk:
        raise ShapeError(f"payload projection expects width {emb.w_payload.shape[0]}, tokens have {seq.d_chunk}")
    layers = [t.layer for t in seq.tokens]
    if layers and max(layers) >= emb.e_layer.shape[0]:
        raise ShapeError(f"layer index {max(layers)} outside embedding table of {emb.e_layer.shape[0]} rows")
    roles = np.array([t.role_index for t in seq.tokens], dtype=np.int64)
    P = T.constant(seq.payloads())
    return T.matmul(P, emb.w_payload) + emb.e_layer[np.array(layers, dtype=np.int64)] + emb.e_role[roles]
