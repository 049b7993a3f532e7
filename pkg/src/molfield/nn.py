"""Small functional building blocks over name->Tensor parameter maps."""

from __future__ import annotations

from typing import Callable, Mapping, MutableMapping, Sequence

import numpy as np

from . import tensor as T
from .tensor import Tensor

Params = MutableMapping[str, Tensor]

ACTIVATIONS: dict[str, Callable[[Tensor], Tensor]] = {
    "softplus": T.softplus,
    "relu": T.relu,
    "tanh": T.tanh,
    "identity": lambda x: x,
}


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape or (fan_in, fan_out))


def param(arr, name: str) -> Tensor:
    return Tensor(arr, requires_grad=True, name=name)


def init_linear(rng, prefix: str, n_in: int, n_out: int, bias: bool = True, scale: float = 1.0) -> dict[str, Tensor]:
    p = {f"{prefix}/W": param(scale * glorot(rng, n_in, n_out), f"{prefix}/W")}
    if bias:
        p[f"{prefix}/b"] = param(np.zeros(n_out), f"{prefix}/b")
    return p


def linear(p: Mapping[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    y = T.matmul(x, p[f"{prefix}/W"])
    b = p.get(f"{prefix}/b")
    return y if b is None else y + b


def init_mlp(rng, prefix: str, sizes: Sequence[int]) -> dict[str, Tensor]:
    p: dict[str, Tensor] = {}
    for k, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        p.update(init_linear(rng, f"{prefix}/{k}", a, b))
    return p


def mlp(p: Mapping[str, Tensor], prefix: str, x: Tensor, n_layers: int, act: str = "softplus") -> Tensor:
    f = ACTIVATIONS[act]
    for k in range(n_layers):
        x = linear(p, f"{prefix}/{k}", x)
        if k < n_layers - 1:
            x = f(x)
    return x


def with_prefix(params: Mapping[str, Tensor], prefix: str) -> dict[str, Tensor]:
    return {k: v for k, v in params.items() if k.startswith(prefix)}


def to_arrays(params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    return {k: np.array(v.data) for k, v in params.items()}


def from_arrays(arrays: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
    return {k: param(v, k) for k, v in arrays.items()}
