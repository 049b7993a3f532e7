"""Coordinate MLP fields and their canonical (pose-free) evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn
from . import tensor as T
from .encoder import CanonicalFrame, canonical_coords
from .tensor import ShapeError, Tensor

PREFIX = "field"


@dataclass(frozen=True)
class FieldArchitecture:
    """``depth`` hidden layers of the given ``width`` plus a linear output layer.

    Affine layers are numbered ``0..depth``.  When ``skip`` is set, the input
    coordinates are concatenated to the hidden state entering layer ``skip``.
    """

    depth: int = 5
    width: int = 64
    out_dim: int = 1
    skip: int | None = 3
    activation: str = "softplus"
    in_dim: int = 3
    widths: tuple = field(default=())
    softplus_beta: float = 10.0

    def __post_init__(self):
        if not self.widths:
            object.__setattr__(self, "widths", (self.width,) * self.depth)
        if len(self.widths) != self.depth or min(self.widths, default=1) < 1:
            raise ValueError(f"widths {self.widths} inconsistent with depth {self.depth}")
        if self.depth < 1 or self.out_dim < 1:
            raise ValueError("depth and out_dim must be positive")
        if self.skip is not None and not 1 < self.skip < self.depth:
            raise ValueError(f"skip index {self.skip} must lie strictly between 1 and depth={self.depth}")
        if self.activation not in nn.ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not self.softplus_beta > 0:
            raise ValueError("softplus_beta must be positive")

    def act(self, y: Tensor) -> Tensor:
        if self.activation == "softplus" and self.softplus_beta != 1.0:
            return T.softplus(y * self.softplus_beta) * (1.0 / self.softplus_beta)
        return nn.ACTIVATIONS[self.activation](y)

    @property
    def n_layers(self) -> int:
        return self.depth + 1

    def layer_shapes(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) of every affine layer in order."""
        sizes = [self.in_dim, *self.widths, self.out_dim]
        shapes = []
        for l in range(self.n_layers):
            fan_in = sizes[l] + (self.in_dim if l == self.skip else 0)
            shapes.append((fan_in, sizes[l + 1]))
        return shapes

    def param_count(self) -> int:
        return sum(a * b + b for a, b in self.layer_shapes())


FIELD_PRESETS = {
    "tiny": FieldArchitecture(depth=2, width=8, skip=None),
    "desk": FieldArchitecture(depth=5, width=64, skip=3),
    "paper": FieldArchitecture(depth=8, width=512, skip=4),
}


@dataclass
class FieldParameters:
    """Per-layer ``(W, b)`` tensors; ``W`` is fan_in x fan_out (row-vector convention)."""

    arch: FieldArchitecture
    weights: list
    biases: list

    def __post_init__(self):
        shapes = self.arch.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ShapeError(f"expected {len(shapes)} layers, got {len(self.weights)}/{len(self.biases)}")
        for l, ((a, b), W, bias) in enumerate(zip(shapes, self.weights, self.biases)):
            if tuple(W.shape) != (a, b) or tuple(bias.shape) != (b,):
                raise ShapeError(f"layer {l}: expected W {(a, b)} and b {(b,)}, got {W.shape} and {bias.shape}")

    def tensors(self) -> dict[str, Tensor]:
        out = {}
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{PREFIX}/{l}/W"] = W
            out[f"{PREFIX}/{l}/b"] = b
        return out

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.array(v.data) for k, v in self.tensors().items()}

    def flat(self) -> np.ndarray:
        return np.concatenate([np.ravel(v.data) for v in self.tensors().values()])

    @classmethod
    def from_arrays(cls, arch: FieldArchitecture, arrays, requires_grad: bool = False) -> "FieldParameters":
        mk = (lambda a, n: nn.param(a, n)) if requires_grad else (lambda a, n: T.constant(a))
        Ws = [mk(arrays[f"{PREFIX}/{l}/W"], f"{PREFIX}/{l}/W") for l in range(arch.n_layers)]
        bs = [mk(arrays[f"{PREFIX}/{l}/b"], f"{PREFIX}/{l}/b") for l in range(arch.n_layers)]
        return cls(arch, Ws, bs)


def init_field_params(arch: FieldArchitecture, seed, requires_grad: bool = True) -> FieldParameters:
    rng = np.random.default_rng(seed)
    arrays = {}
    for l, (a, b) in enumerate(arch.layer_shapes()):
        arrays[f"{PREFIX}/{l}/W"] = nn.glorot(rng, a, b)
        arrays[f"{PREFIX}/{l}/b"] = np.zeros(b)
    return FieldParameters.from_arrays(arch, arrays, requires_grad)


def geometric_init_field_params(arch: FieldArchitecture, seed, radius: float = 3.0, extent: float = 8.0,
                                fit_steps: int = 200, requires_grad: bool = True) -> FieldParameters:
    """Weights whose channel-0 output approximates the SDF of a sphere, ``|x| - radius``.

    Hidden layers use N(0, 2/fan_out) weights and zero biases, so the last hidden
    state grows roughly linearly with ``|x|``.  The output layer starts from a
    positive constant vector and is then rescaled by a least-squares fit of
    ``|x| - radius`` over points drawn uniformly in a ball of radius ``extent``,
    and ``fit_steps`` Adam steps of L1 regression on those points refine it.
    """
    rng = np.random.default_rng(seed)
    arrays = {}
    shapes = arch.layer_shapes()
    for l, (a, b) in enumerate(shapes[:-1]):
        arrays[f"{PREFIX}/{l}/W"] = rng.normal(0.0, np.sqrt(2.0 / b), size=(a, b))
        arrays[f"{PREFIX}/{l}/b"] = np.zeros(b)
    a, b = shapes[-1]
    W = np.zeros((a, b))
    W[:, 0] = np.sqrt(np.pi) / np.sqrt(a) + rng.normal(0.0, 1e-4, size=a)
    if b > 1:
        W[:, 1:] = nn.glorot(rng, a, b - 1)
    arrays[f"{PREFIX}/{arch.depth}/W"] = W
    arrays[f"{PREFIX}/{arch.depth}/b"] = np.zeros(b)
    pts = rng.normal(size=(512, arch.in_dim))
    pts *= (extent * rng.random(512) ** (1.0 / arch.in_dim) / np.linalg.norm(pts, axis=1))[:, None]
    raw = field_eval(FieldParameters.from_arrays(arch, arrays), arch, pts).data[:, 0]
    A = np.stack([raw, np.ones_like(raw)], axis=1)
    scale, shift = np.linalg.lstsq(A, np.linalg.norm(pts, axis=1) - radius, rcond=None)[0]
    arrays[f"{PREFIX}/{arch.depth}/W"][:, 0] *= scale
    arrays[f"{PREFIX}/{arch.depth}/b"][0] = shift
    target = T.constant(np.linalg.norm(pts, axis=1) - radius)
    m = {k: np.zeros_like(v) for k, v in arrays.items()}
    v2 = {k: np.zeros_like(v) for k, v in arrays.items()}
    for step in range(1, fit_steps + 1):
        theta = FieldParameters.from_arrays(arch, arrays, requires_grad=True)
        with T.enable_grad():
            err = T.mean(T.absolute(field_eval(theta, arch, pts)[:, 0] - target))
            tensors = theta.tensors()
            grads = T.grad(err, list(tensors.values()))
        lr = 1e-3 * (1.0 - (step - 1) / fit_steps)
        for k, g in zip(tensors, grads):
            m[k] = 0.9 * m[k] + 0.1 * g.data
            v2[k] = 0.999 * v2[k] + 0.001 * g.data ** 2
            mh, vh = m[k] / (1 - 0.9 ** step), v2[k] / (1 - 0.999 ** step)
            arrays[k] = arrays[k] - lr * mh / (np.sqrt(vh) + 1e-8)
    return FieldParameters.from_arrays(arch, arrays, requires_grad)


def field_eval(theta: FieldParameters, arch: FieldArchitecture, x) -> Tensor:
    """Evaluate the MLP at one point (3,) or a batch (M, 3)."""
    x = T.as_tensor(x)
    single = x.ndim == 1
    if x.shape[-1] != arch.in_dim:
        raise ShapeError(f"field input must have {arch.in_dim} columns, got shape {x.shape}")
    inp = T.reshape(x, (1, arch.in_dim)) if single else x
    y = inp
    for l in range(arch.n_layers):
        if l == arch.skip:
            y = T.concat([y, inp], axis=1)
        y = T.matmul(y, theta.weights[l]) + theta.biases[l]
        if l < arch.depth:
            y = arch.act(y)
    return T.reshape(y, (arch.out_dim,)) if single else y


def field_grad(theta: FieldParameters, arch: FieldArchitecture, x, create_graph: bool = False) -> Tensor:
    """Spatial gradient of output channel 0, shape matching ``x``."""
    x = T.as_tensor(x)
    xv = Tensor(x.data, requires_grad=True)
    with T.enable_grad():
        y = field_eval(theta, arch, xv)
        f0 = y[0] if xv.ndim == 1 else y[:, 0]
        (g,) = T.grad(T.tsum(f0), [xv], create_graph=create_graph)
    return g


def canonical_field_eval(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame, x) -> Tensor:
    return field_eval(theta, arch, canonical_coords(frame, x))


def canonical_field_value_and_grad(theta: FieldParameters, arch: FieldArchitecture, frame: CanonicalFrame, x,
                                   create_graph: bool = False) -> tuple[Tensor, Tensor]:
    """Field values and canonical-space gradient of channel 0 at world points ``x`` (M x 3).

    With ``create_graph`` the gradient stays differentiable w.r.t. the field
    parameters and the frame, as the eikonal penalty requires.
    """
    with T.enable_grad():
        c = canonical_coords(frame, x)
        if not c.requires_grad:
            c = Tensor(c.data, requires_grad=True)
        y = field_eval(theta, arch, c)
        (g,) = T.grad(T.tsum(y[:, 0]), [c], create_graph=create_graph)
    return y, g
