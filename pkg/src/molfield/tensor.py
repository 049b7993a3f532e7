"""Reverse-mode automatic differentiation over dense float64 arrays.

Every operation records its inputs and a vector-Jacobian product written in
terms of other tensor operations.  Running the backward pass with
``create_graph=True`` therefore records a differentiable graph of the
gradient itself, which is what the eikonal penalty needs
(a loss on ``grad_x f`` that is differentiated again w.r.t. the weights).
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "NonFiniteError",
    "ComputeGraph",
    "as_tensor",
    "no_grad",
    "enable_grad",
    "is_grad_enabled",
    "grad",
    "forward_eval",
    "backward",
    "grad_check",
    "matmul",
    "exp",
    "log",
    "sin",
    "cos",
    "tanh",
    "sigmoid",
    "softplus",
    "relu",
    "sqrt",
    "absolute",
    "softmax",
    "layer_norm",
    "concat",
    "stack",
    "cross",
    "l1_norm",
    "l2_norm",
    "scatter_add",
    "broadcast_to",
    "where_const",
]


class ShapeError(ValueError):
    """Raised when an operation receives incompatible shapes."""


class NonFiniteError(ValueError):
    """Raised when a tensor would hold NaN or Inf."""


_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_mode, "enabled", True)


@contextmanager
def _grad_mode(enabled: bool):
    prev = is_grad_enabled()
    _mode.enabled = enabled
    try:
        yield
    finally:
        _mode.enabled = prev


def no_grad():
    """Context manager that stops graph recording in the current thread."""
    return _grad_mode(False)


def enable_grad():
    return _grad_mode(True)


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite values produced by '{op}'")


class Tensor:
    """Immutable float64 array that may take part in a compute graph."""

    __slots__ = ("data", "requires_grad", "op", "inputs", "vjp", "name")
    __array_priority__ = 100.0

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        arr = np.array(data, dtype=np.float64)
        _check_finite(arr, "constant" if name is None else name)
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.op = "leaf"
        self.inputs: tuple[Tensor, ...] = ()
        self.vjp = None
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, op: str) -> "Tensor":
        if arr.dtype != np.float64:
            arr = arr.astype(np.float64)
        _check_finite(arr, op)
        if arr.flags.writeable:
            arr.flags.writeable = False
        out = cls.__new__(cls)
        out.data = arr
        out.requires_grad = False
        out.op = op
        out.inputs = ()
        out.vjp = None
        out.name = None
        return out

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return not self.inputs

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else _raise_not_scalar(self)

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data, "detach")

    def __repr__(self) -> str:
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op}{tag})"

    def __len__(self) -> int:
        return self.shape[0]

    # -- operators -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, key):
        return getitem(self, key)

    # -- methods mirroring the free functions ---------------------------
    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def _raise_not_scalar(t: Tensor):
    raise ShapeError(f"tensor of shape {t.shape} is not a scalar")


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(arr: np.ndarray, op: str, inputs: tuple, vjp_np, vjp_t=None) -> Tensor:
    """Wrap ``arr`` as the output of ``op``.

    ``vjp_np(g, needs)`` maps an ndarray cotangent to ndarray input cotangents;
    ``vjp_t`` does the same with Tensors so the backward pass can itself be
    recorded (second-order use).
    """
    out = Tensor._wrap(arr, op)
    if is_grad_enabled():
        for t in inputs:
            if t.requires_grad:
                out.requires_grad = True
                out.inputs = inputs
                out.vjp = (vjp_np, vjp_t)
                break
    return out


def _const(arr: np.ndarray) -> Tensor:
    return Tensor._wrap(arr, "constant")


# ---------------------------------------------------------------------------
# broadcasting helpers


def _sum_axes(gshape, shape):
    extra = len(gshape) - len(shape)
    axes = list(range(extra))
    for i, n in enumerate(shape):
        if n == 1 and gshape[extra + i] != 1:
            axes.append(extra + i)
    return tuple(axes)


def _unb_np(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    axes = _sum_axes(g.shape, shape)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _unbroadcast(g: Tensor, shape: tuple[int, ...]) -> Tensor:
    if g.shape == shape:
        return g
    axes = _sum_axes(g.shape, shape)
    out = tsum(g, axis=axes, keepdims=True) if axes else g
    if out.shape != shape:
        out = reshape(out, shape)
    return out


def broadcast_to(a, shape) -> Tensor:
    a = as_tensor(a)
    shape = tuple(shape)
    if a.shape == shape:
        return a
    try:
        arr = np.broadcast_to(a.data, shape).copy()
    except ValueError as exc:
        raise ShapeError(f"broadcast_to: cannot broadcast {a.shape} to {shape}") from exc
    return _node(
        arr, "broadcast_to", (a,),
        lambda g, needs: (_unb_np(g, a.shape),),
        lambda g, needs: (_unbroadcast(g, a.shape),),
    )


def _binary_data(op, fn, a, b):
    try:
        return fn(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from exc


def add(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    arr = _binary_data("add", np.add, a, b)

    def vjp_np(g, needs):
        return (_unb_np(g, a.shape) if needs[0] else None, _unb_np(g, b.shape) if needs[1] else None)

    def vjp_t(g, needs):
        return (_unbroadcast(g, a.shape) if needs[0] else None, _unbroadcast(g, b.shape) if needs[1] else None)

    return _node(np.asarray(arr), "add", (a, b), vjp_np, vjp_t)


def sub(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    arr = _binary_data("sub", np.subtract, a, b)

    def vjp_np(g, needs):
        return (_unb_np(g, a.shape) if needs[0] else None, _unb_np(-g, b.shape) if needs[1] else None)

    def vjp_t(g, needs):
        return (_unbroadcast(g, a.shape) if needs[0] else None, _unbroadcast(neg(g), b.shape) if needs[1] else None)

    return _node(np.asarray(arr), "sub", (a, b), vjp_np, vjp_t)


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    arr = _binary_data("mul", np.multiply, a, b)

    def vjp_np(g, needs):
        return (
            _unb_np(g * b.data, a.shape) if needs[0] else None,
            _unb_np(g * a.data, b.shape) if needs[1] else None,
        )

    def vjp_t(g, needs):
        return (
            _unbroadcast(g * b, a.shape) if needs[0] else None,
            _unbroadcast(g * a, b.shape) if needs[1] else None,
        )

    return _node(np.asarray(arr), "mul", (a, b), vjp_np, vjp_t)


def div(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    arr = _binary_data("div", np.divide, a, b)

    def vjp_np(g, needs):
        return (
            _unb_np(g / b.data, a.shape) if needs[0] else None,
            _unb_np(-g * a.data / (b.data * b.data), b.shape) if needs[1] else None,
        )

    def vjp_t(g, needs):
        return (
            _unbroadcast(g / b, a.shape) if needs[0] else None,
            _unbroadcast(neg(g) * a / (b * b), b.shape) if needs[1] else None,
        )

    return _node(np.asarray(arr), "div", (a, b), vjp_np, vjp_t)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _node(-a.data, "neg", (a,), lambda g, needs: (-g,), lambda g, needs: (neg(g),))


def power(a, p: float) -> Tensor:
    a = as_tensor(a)
    p = float(p)
    arr = np.power(a.data, p)

    def vjp_np(g, needs):
        return (g * (p * np.power(a.data, p - 1.0)),)

    def vjp_t(g, needs):
        return (g if p == 1.0 else g * (p * power(a, p - 1.0)),)

    return _node(arr, "pow", (a,), vjp_np, vjp_t)


def _swap_np(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def _swap(t: Tensor) -> Tensor:
    axes = list(range(t.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(t, tuple(axes))


def matmul(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        arr = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}") from exc

    def vjp_np(g, needs):
        ga = _unb_np(g @ _swap_np(b.data), a.shape) if needs[0] else None
        gb = _unb_np(_swap_np(a.data) @ g, b.shape) if needs[1] else None
        return ga, gb

    def vjp_t(g, needs):
        ga = _unbroadcast(matmul(g, _swap(b)), a.shape) if needs[0] else None
        gb = _unbroadcast(matmul(_swap(a), g), b.shape) if needs[1] else None
        return ga, gb

    return _node(arr, "matmul", (a, b), vjp_np, vjp_t)


# ---------------------------------------------------------------------------
# elementwise


def exp(a) -> Tensor:
    a = as_tensor(a)
    arr = np.exp(a.data)
    holder = []
    out = _node(arr, "exp", (a,), lambda g, needs: (g * arr,), lambda g, needs: (g * holder[0],))
    holder.append(out)
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _node(out, "log", (a,), lambda g, needs: (g / a.data,), lambda g, needs: (g / a,))


def sin(a) -> Tensor:
    a = as_tensor(a)
    return _node(
        np.sin(a.data), "sin", (a,),
        lambda g, needs: (g * np.cos(a.data),),
        lambda g, needs: (g * cos(a),),
    )


def cos(a) -> Tensor:
    a = as_tensor(a)
    return _node(
        np.cos(a.data), "cos", (a,),
        lambda g, needs: (-g * np.sin(a.data),),
        lambda g, needs: (neg(g * sin(a)),),
    )


def tanh(a) -> Tensor:
    a = as_tensor(a)
    arr = np.tanh(a.data)
    holder = []

    def vjp_t(g, needs):
        t = holder[0]
        return (g * (1.0 - t * t),)

    out = _node(arr, "tanh", (a,), lambda g, needs: (g * (1.0 - arr * arr),), vjp_t)
    holder.append(out)
    return out


def _np_sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    arr = _np_sigmoid(a.data)
    holder = []

    def vjp_t(g, needs):
        s = holder[0]
        return (g * s * (1.0 - s),)

    out = _node(arr, "sigmoid", (a,), lambda g, needs: (g * arr * (1.0 - arr),), vjp_t)
    holder.append(out)
    return out


def softplus(a) -> Tensor:
    a = as_tensor(a)
    return _node(
        np.logaddexp(0.0, a.data), "softplus", (a,),
        lambda g, needs: (g * _np_sigmoid(a.data),),
        lambda g, needs: (g * sigmoid(a),),
    )


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)
    return _node(
        a.data * mask, "relu", (a,),
        lambda g, needs: (g * mask,),
        lambda g, needs: (g * _const(mask),),
    )


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    arr = np.sqrt(a.data)
    holder = []
    out = _node(
        arr, "sqrt", (a,),
        lambda g, needs: (g * 0.5 / arr,),
        lambda g, needs: (g * 0.5 / holder[0],),
    )
    holder.append(out)
    return out


def absolute(a) -> Tensor:
    a = as_tensor(a)
    sign = np.sign(a.data)
    return _node(
        np.abs(a.data), "abs", (a,),
        lambda g, needs: (g * sign,),
        lambda g, needs: (g * _const(sign),),
    )


def where_const(mask: np.ndarray, a, b) -> Tensor:
    """Select ``a`` where the constant boolean ``mask`` holds, else ``b``."""
    m = np.asarray(mask, dtype=np.float64)
    return a * _const(m) + b * _const(1.0 - m)


# ---------------------------------------------------------------------------
# reductions and shape manipulation


def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    arr = np.asarray(np.sum(a.data, axis=axes, keepdims=keepdims))
    kept = tuple(1 if i in axes else n for i, n in enumerate(a.shape))

    def vjp_np(g, needs):
        return (np.broadcast_to(g.reshape(kept), a.shape),)

    def vjp_t(g, needs):
        if not keepdims:
            g = reshape(g, kept)
        return (broadcast_to(g, a.shape),)

    return _node(arr, "sum", (a,), vjp_np, vjp_t)


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return tsum(a, axis, keepdims) * (1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    try:
        arr = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot reshape {a.shape} into {shape}") from exc
    return _node(
        arr, "reshape", (a,),
        lambda g, needs: (g.reshape(a.shape),),
        lambda g, needs: (reshape(g, a.shape),),
    )


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(int(i) for i in np.argsort(axes))
    return _node(
        np.transpose(a.data, axes), "transpose", (a,),
        lambda g, needs: (np.transpose(g, inv),),
        lambda g, needs: (transpose(g, inv),),
    )


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = tuple(as_tensor(t) for t in tensors)
    try:
        arr = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(t.shape) for t in ts)
        raise ShapeError(f"concat: incompatible shapes {shapes} along axis {axis}") from exc
    ax = axis % arr.ndim
    bounds = np.cumsum([0] + [t.shape[ax] for t in ts]).tolist()

    def keys(ndim):
        for i in range(len(ts)):
            key = [slice(None)] * ndim
            key[ax] = slice(bounds[i], bounds[i + 1])
            yield tuple(key)

    def vjp_np(g, needs):
        return tuple(g[k] if need else None for k, need in zip(keys(g.ndim), needs))

    def vjp_t(g, needs):
        return tuple(getitem(g, k) if need else None for k, need in zip(keys(g.ndim), needs))

    return _node(arr, "concat", ts, vjp_np, vjp_t)


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    expanded = []
    for t in ts:
        shape = list(t.shape)
        shape.insert(axis % (t.ndim + 1), 1)
        expanded.append(reshape(t, tuple(shape)))
    return concat(expanded, axis=axis)


def _scatter_np(values: np.ndarray, key, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=np.float64)
    np.add.at(out, key, values)
    return out


def getitem(a, key) -> Tensor:
    a = as_tensor(a)
    try:
        arr = a.data[key]
    except IndexError as exc:
        raise ShapeError(f"slice: index {key!r} invalid for shape {a.shape}") from exc
    arr = np.asarray(arr, dtype=np.float64)
    return _node(
        arr, "slice", (a,),
        lambda g, needs: (_scatter_np(g, key, a.shape),),
        lambda g, needs: (scatter_add(g, key, a.shape),),
    )


def scatter_add(values, key, shape) -> Tensor:
    """Zeros of ``shape`` with ``values`` accumulated at ``key`` (adjoint of slicing)."""
    values = as_tensor(values)
    try:
        arr = _scatter_np(values.data, key, shape)
    except (IndexError, ValueError) as exc:
        raise ShapeError(f"scatter_add: cannot place {values.shape} into {shape} at {key!r}") from exc
    return _node(
        arr, "scatter_add", (values,),
        lambda g, needs: (np.asarray(g[key]),),
        lambda g, needs: (getitem(g, key),),
    )


# ---------------------------------------------------------------------------
# composite and fused operations


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    arr = e / np.sum(e, axis=axis, keepdims=True)
    holder = []

    def vjp_np(g, needs):
        return (arr * (g - np.sum(g * arr, axis=axis, keepdims=True)),)

    def vjp_t(g, needs):
        y = holder[0]
        return (y * (g - tsum(g * y, axis=axis, keepdims=True)),)

    out = _node(arr, "softmax", (a,), vjp_np, vjp_t)
    holder.append(out)
    return out


def layer_norm(x, gamma=None, beta=None, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis; ``eps`` sits inside the variance."""
    x = as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    n = x.shape[-1]

    def vjp_np(g, needs):
        return (inv * (g - g.mean(axis=-1, keepdims=True) - xhat * (g * xhat).mean(axis=-1, keepdims=True)),)

    def vjp_t(g, needs):
        # recompute through primitives so the result stays differentiable
        xc_t = x - mean(x, axis=-1, keepdims=True)
        inv_t = power(mean(xc_t * xc_t, axis=-1, keepdims=True) + eps, -0.5)
        xhat_t = xc_t * inv_t
        gm = mean(g, axis=-1, keepdims=True)
        gx = mean(g * xhat_t, axis=-1, keepdims=True)
        return (inv_t * (g - gm - xhat_t * gx),)

    del n
    y = _node(xhat, "layer_norm", (x,), vjp_np, vjp_t)
    if gamma is not None:
        y = y * gamma
    if beta is not None:
        y = y + beta
    return y


def cross(a, b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape[-1] != 3 or b.shape[-1] != 3:
        raise ShapeError(f"cross: last axis must be 3, got {a.shape} and {b.shape}")
    arr = np.cross(a.data, b.data)

    def vjp_np(g, needs):
        return (
            _unb_np(np.cross(b.data, g), a.shape) if needs[0] else None,
            _unb_np(np.cross(g, a.data), b.shape) if needs[1] else None,
        )

    def vjp_t(g, needs):
        return (
            _unbroadcast(cross(b, g), a.shape) if needs[0] else None,
            _unbroadcast(cross(g, a), b.shape) if needs[1] else None,
        )

    return _node(arr, "cross", (a, b), vjp_np, vjp_t)


def l1_norm(a, axis=None, keepdims=False) -> Tensor:
    return tsum(absolute(a), axis, keepdims)


def l2_norm(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    return sqrt(tsum(a * a, axis, keepdims))


# ---------------------------------------------------------------------------
# backward pass


def _topo(output: Tensor) -> list[Tensor]:
    """Nodes that require grad and feed ``output``, inputs before consumers."""
    order: list[Tensor] = []
    seen: set[int] = set()
    if not output.requires_grad:
        return order
    stack: list[tuple[Tensor, bool]] = [(output, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.inputs:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def grad(
    output: Tensor,
    inputs: Sequence[Tensor],
    grad_output=None,
    create_graph: bool = False,
) -> list[Tensor]:
    """Gradient of ``output`` with respect to each of ``inputs``.

    Inputs that ``output`` does not depend on receive zeros.  With
    ``create_graph`` the returned tensors are themselves differentiable.
    """
    if grad_output is None:
        if output.size != 1:
            raise ShapeError(f"backward needs a scalar output, got shape {output.shape}")
        seed = np.ones(output.shape)
    else:
        seed = grad_output.data if isinstance(grad_output, Tensor) else np.asarray(grad_output, dtype=np.float64)
    order = _topo(output)
    wanted = {id(t) for t in inputs}
    relevant: set[int] = set()
    for node in order:
        if id(node) in wanted or any(id(p) in relevant for p in node.inputs):
            relevant.add(id(node))

    grads: dict[int, object] = {}
    if id(output) in relevant:
        grads[id(output)] = _const(seed) if create_graph else seed
    slot = 1 if create_graph else 0
    with _grad_mode(create_graph):
        for node in reversed(order):
            key = id(node)
            if key not in relevant or not node.inputs:
                continue
            g = grads.get(key)
            if g is None:
                continue
            if key not in wanted:
                del grads[key]
            needs = tuple(id(p) in relevant for p in node.inputs)
            fn = node.vjp[slot]
            if fn is None:
                raise NotImplementedError(f"'{node.op}' has no differentiable backward")
            parts = fn(g, needs)
            for p, gp, need in zip(node.inputs, parts, needs):
                if not need or gp is None:
                    continue
                pk = id(p)
                grads[pk] = gp if pk not in grads else grads[pk] + gp
    out = []
    for t in inputs:
        g = grads.get(id(t))
        if g is None:
            out.append(_const(np.zeros(t.shape)))
        elif isinstance(g, Tensor):
            out.append(g)
        else:
            out.append(Tensor._wrap(np.array(g, dtype=np.float64), "grad"))
    return out


# ---------------------------------------------------------------------------
# explicit graph interface


class ComputeGraph:
    """A traced function of named leaves.

    ``fn`` receives one keyword argument per leaf name and returns a Tensor.
    Leaves listed in ``params`` are differentiated by :func:`backward`.
    """

    def __init__(self, fn: Callable[..., Tensor], leaves: Sequence[str], params: Sequence[str] | None = None):
        self.fn = fn
        self.leaves = tuple(leaves)
        self.params = tuple(leaves if params is None else params)
        self.nodes: list[tuple[str, tuple[int, ...], Tensor]] = []
        self.bound: dict[str, Tensor] = {}
        self.output: Tensor | None = None

    def __repr__(self) -> str:
        return f"ComputeGraph(leaves={self.leaves}, nodes={len(self.nodes)})"


def forward_eval(graph: ComputeGraph, bindings: Mapping[str, object]) -> Tensor:
    """Evaluate ``graph`` with leaf values from ``bindings`` and cache the trace."""
    missing = [n for n in graph.leaves if n not in bindings]
    if missing:
        raise KeyError(f"unbound leaves: {missing}")
    bound = {
        n: Tensor(bindings[n].data if isinstance(bindings[n], Tensor) else bindings[n],
                  requires_grad=n in graph.params, name=n)
        for n in graph.leaves
    }
    with enable_grad():
        out = graph.fn(**bound)
    out = as_tensor(out)
    order = _topo(out)
    index = {id(t): i for i, t in enumerate(order)}
    graph.nodes = [(t.op, tuple(index[id(p)] for p in t.inputs if id(p) in index), t) for t in order]
    graph.bound = bound
    graph.output = out
    return out


def backward(graph: ComputeGraph, output: Tensor | None = None) -> dict[str, np.ndarray]:
    """Gradients of the (scalar) graph output w.r.t. every parameter leaf."""
    out = graph.output if output is None else output
    if out is None:
        raise RuntimeError("forward_eval must run before backward")
    if out.size != 1:
        raise ShapeError(f"backward needs a scalar output, got shape {out.shape}")
    leaves = [graph.bound[n] for n in graph.params]
    gs = grad(out, leaves)
    return {n: g.data for n, g in zip(graph.params, gs)}


def grad_check(fn: Callable[[Tensor], Tensor], point, step: float = 1e-6) -> float:
    """Max over coordinates of |analytic - central difference| / max(1, |analytic|)."""
    x0 = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)
    x = Tensor(x0, requires_grad=True)
    y = fn(x)
    if y.size != 1:
        raise ShapeError(f"grad_check needs a scalar function, got shape {y.shape}")
    (g,) = grad(y, [x])
    analytic = g.data.reshape(-1)
    flat = x0.reshape(-1)
    numeric = np.empty_like(flat)
    with no_grad():
        for i in range(flat.size):
            xp = flat.copy()
            xp[i] += step
            xm = flat.copy()
            xm[i] -= step
            fp = fn(Tensor(xp.reshape(x0.shape))).item()
            fm = fn(Tensor(xm.reshape(x0.shape))).item()
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NonFiniteError(f"non-finite evaluation at coordinate {i}")
            numeric[i] = (fp - fm) / (2.0 * step)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max()) if err.size else 0.0


def parameters_grad(loss: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    """Convenience: gradient of ``loss`` for a name->Tensor mapping."""
    names = list(params)
    gs = grad(loss, [params[n] for n in names])
    return {n: g.data for n, g in zip(names, gs)}


def zeros(shape) -> Tensor:
    return Tensor._wrap(np.zeros(shape), "zeros")


def ones(shape) -> Tensor:
    return Tensor._wrap(np.ones(shape), "ones")


def constant(arr) -> Tensor:
    return Tensor._wrap(np.array(arr, dtype=np.float64), "constant")


def iter_leaves(t: Tensor) -> Iterable[Tensor]:
    return (n for n in _topo(t) if n.is_leaf)
