"""Float64 n-d arrays with reverse-mode automatic differentiation.

Every op takes :class:`Tensor` operands (Python scalars are promoted to
rank-0 constants), computes its value with numpy, and, when any operand
requires a gradient, records a closure that maps the output gradient to
operand gradients.  :meth:`Tensor.backward` replays those closures in
reverse topological order.

Broadcasting is deliberately narrow: operands of a binary op must have
the same rank, and an axis may differ only if one side has extent 1.
Rank-0 operands broadcast against anything.
"""

from __future__ import annotations

import contextlib
import math
import threading
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DomainError, ShapeError, UsageError

__all__ = [
    "Tensor",
    "tensor",
    "no_grad",
    "grad_enabled",
    "elementwise",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "exp",
    "log",
    "relu",
    "softplus",
    "square",
    "matmul",
    "linear",
    "conv2d",
    "conv_transpose2d",
    "reduce",
    "sum",
    "mean",
    "amin",
    "amax",
    "logsumexp",
    "reshape",
    "concat",
    "stack",
    "take",
]

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording on this thread for the duration of the block."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


GradFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class Tensor:
    """A float64 array that can take part in a differentiable computation.

    ``data`` is read-only.  Optimizers update parameters by rebinding
    ``data`` to a fresh array, never by writing into it.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fn", "op", "_released")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        arr.flags.writeable = False
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._grad_fn: GradFn | None = None
        self.op = "leaf"
        self._released = False

    @classmethod
    def _from_op(cls, data: np.ndarray, parents: tuple[Tensor, ...], grad_fn: GradFn, op: str) -> Tensor:
        out = cls.__new__(cls)
        data = np.asarray(data, dtype=np.float64)
        data.flags.writeable = False
        out.data = data
        out.grad = None
        out.op = op
        out._released = False
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._grad_fn = grad_fn
        else:
            out.requires_grad = False
            out._parents = ()
            out._grad_fn = None
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
        return self._grad_fn is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self.op})"

    def __len__(self) -> int:
        return self.shape[0]

    # -- autodiff --------------------------------------------------------

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into ``leaf.grad`` for every leaf requiring grad.

        The graph is released afterwards; calling ``backward`` again on the
        same root raises :class:`UsageError`.
        """
        if self.size != 1:
            raise UsageError(f"backward() needs a scalar root, got shape {self.shape}")
        if self._released:
            raise UsageError("graph already consumed by a previous backward(); rebuild it")
        if not self.requires_grad:
            raise UsageError("root does not depend on any tensor with requires_grad=True")

        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones(self.shape)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._grad_fn is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._grad_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if pg.shape != parent.shape:
                    raise AssertionError(f"{node.op}: grad shape {pg.shape} != {parent.shape}")
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg
        for node in order:
            if node._grad_fn is not None:
                node._parents = ()
                node._grad_fn = None
                node._released = True

    # -- operators -------------------------------------------------------

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

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return _index(self, key)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def relu(self):
        return relu(self)

    def softplus(self):
        return softplus(self)

    def sum(self, axis=None, keepdims=False):
        return sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def tensor(data, requires_grad: bool = False) -> Tensor:
    return data if isinstance(data, Tensor) else Tensor(data, requires_grad)


def _lift(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=np.float64)
    return Tensor(arr)


# -- broadcasting --------------------------------------------------------


def _broadcast_shape(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    if a == b:
        return a
    if a == ():
        return b
    if b == ():
        return a
    if len(a) != len(b):
        raise ShapeError(f"rank mismatch {a} vs {b}; only same-rank size-1 broadcasting is allowed")
    out = []
    for x, y in zip(a, b):
        if x == y or y == 1:
            out.append(x)
        elif x == 1:
            out.append(y)
        else:
            raise ShapeError(f"cannot broadcast {a} with {b}")
    return tuple(out)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    axes = tuple(i for i, (s, t) in enumerate(zip(shape, g.shape)) if s == 1 and t != 1)
    return g.sum(axis=axes, keepdims=True)


# -- elementwise -----------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a.shape, b.shape)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(a.data + b.data, (a, b), grad_fn, "add")


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a.shape, b.shape)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(a.data - b.data, (a, b), grad_fn, "sub")


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a.shape, b.shape)

    def grad_fn(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._from_op(a.data * b.data, (a, b), grad_fn, "mul")


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    _broadcast_shape(a.shape, b.shape)
    if np.any(b.data == 0):
        raise DomainError("division by zero")
    out = a.data / b.data

    def grad_fn(g):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return Tensor._from_op(out, (a, b), grad_fn, "div")


def neg(a) -> Tensor:
    a = _lift(a)
    return Tensor._from_op(-a.data, (a,), lambda g: (-g,), "neg")


def square(a) -> Tensor:
    a = _lift(a)
    return Tensor._from_op(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,), "square")


def exp(a) -> Tensor:
    a = _lift(a)
    out = np.exp(a.data)
    return Tensor._from_op(out, (a,), lambda g: (g * out,), "exp")


def log(a) -> Tensor:
    a = _lift(a)
    if np.any(a.data <= 0):
        raise DomainError("log of a non-positive value")
    return Tensor._from_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def relu(a) -> Tensor:
    a = _lift(a)
    mask = a.data > 0
    return Tensor._from_op(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,), "relu")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softplus(a) -> Tensor:
    """log(1 + exp(a)), evaluated without overflow."""
    a = _lift(a)
    return Tensor._from_op(np.logaddexp(0.0, a.data), (a,), lambda g: (g * _sigmoid(a.data),), "softplus")


_UNARY = {"neg": neg, "exp": exp, "log": log, "relu": relu, "softplus": softplus}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, a, b=None) -> Tensor:
    """Dispatch an elementwise op by name (add, sub, mul, neg, exp, log, relu, softplus)."""
    if op in _BINARY:
        if b is None:
            raise UsageError(f"{op} needs two operands")
        return _BINARY[op](a, b)
    if op in _UNARY:
        if b is not None:
            raise UsageError(f"{op} takes a single operand")
        return _UNARY[op](a)
    raise UsageError(f"unknown elementwise op {op!r}")


# -- linear algebra --------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects matrices, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")

    def grad_fn(g):
        return g @ b.data.T, a.data.T @ g

    return Tensor._from_op(a.data @ b.data, (a, b), grad_fn, "matmul")


def linear(x, weight, bias=None) -> Tensor:
    """``x @ weight.T + bias`` for ``x`` of shape (in,) or (N, in); ``weight`` is (out, in)."""
    x, weight = _lift(x), _lift(weight)
    if weight.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} incompatible with weight {weight.shape}")
    parents: tuple[Tensor, ...] = (x, weight)
    out = x.data @ weight.data.T
    if bias is not None:
        bias = _lift(bias)
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
        out = out + bias.data
        parents = (x, weight, bias)

    def grad_fn(g):
        gx = g @ weight.data
        g2 = g.reshape(-1, weight.shape[0])
        gw = g2.T @ x.data.reshape(-1, weight.shape[1])
        if bias is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    return Tensor._from_op(out, parents, grad_fn, "linear")


# -- convolution -------------------------------------------------------------


def _out_extent(n: int, k: int, stride: int, pad: int) -> int:
    span = n + 2 * pad - k
    if span < 0:
        raise ShapeError(f"kernel {k} larger than padded extent {n + 2 * pad}")
    if span % stride:
        raise ShapeError(f"non-integral output extent: ({n}+2*{pad}-{k})/{stride}")
    return span // stride + 1


def _windows(xp: np.ndarray, kh: int, kw: int, stride: int) -> np.ndarray:
    v = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return v[:, :, ::stride, ::stride]


def _conv_forward(x: np.ndarray, k: np.ndarray, stride: int, pad: int) -> np.ndarray:
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = _windows(xp, k.shape[2], k.shape[3], stride)
    out = np.tensordot(win, k, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _conv_adjoint(g: np.ndarray, k: np.ndarray, hw: tuple[int, int], stride: int, pad: int) -> np.ndarray:
    """Map output-space ``g`` (N,O,H',W') back to input space (N,C,H,W)."""
    n = g.shape[0]
    c, kh, kw = k.shape[1], k.shape[2], k.shape[3]
    ho, wo = g.shape[2], g.shape[3]
    cols = np.tensordot(g, k, axes=([1], [0]))  # N,H',W',C,kh,kw
    xp = np.zeros((n, c, hw[0] + 2 * pad, hw[1] + 2 * pad))
    for i in range(kh):
        for j in range(kw):
            xp[:, :, i : i + stride * ho : stride, j : j + stride * wo : stride] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    if pad:
        xp = xp[:, :, pad:-pad, pad:-pad]
    return xp


def _kernel_grad(x: np.ndarray, g: np.ndarray, kshape: tuple[int, ...], stride: int, pad: int) -> np.ndarray:
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = _windows(xp, kshape[2], kshape[3], stride)
    return np.tensordot(g, win, axes=([0, 2, 3], [0, 2, 3]))


def _batched(x: Tensor, name: str) -> bool:
    if x.ndim == 4:
        return True
    if x.ndim == 3:
        return False
    raise ShapeError(f"{name}: expected C×H×W or N×C×H×W input, got {x.shape}")


def conv2d(x, kernels, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of ``x`` (C_in×H×W, optionally batched) with ``kernels`` (C_out×C_in×kh×kw)."""
    x, kernels = _lift(x), _lift(kernels)
    batched = _batched(x, "conv2d")
    if kernels.ndim != 4 or kernels.shape[1] != x.shape[-3]:
        raise ShapeError(f"conv2d: kernels {kernels.shape} do not match input {x.shape}")
    if stride < 1 or pad < 0:
        raise ShapeError("conv2d: stride must be >= 1 and pad >= 0")
    h, w = x.shape[-2:]
    _out_extent(h, kernels.shape[2], stride, pad)
    _out_extent(w, kernels.shape[3], stride, pad)
    x4 = x.data if batched else x.data[None]
    out = _conv_forward(x4, kernels.data, stride, pad)

    def grad_fn(g):
        g4 = g if batched else g[None]
        gx = _conv_adjoint(g4, kernels.data, (h, w), stride, pad)
        gk = _kernel_grad(x4, g4, kernels.shape, stride, pad)
        return (gx if batched else gx[0]), gk

    return Tensor._from_op(out if batched else out[0], (x, kernels), grad_fn, "conv2d")


def conv_transpose2d(y, kernels, stride: int = 1, pad: int = 0) -> Tensor:
    """Adjoint of :func:`conv2d` with the same ``kernels`` (C_out×C_in×kh×kw).

    Maps C_out channels to C_in channels; spatial extent becomes
    ``(H-1)*stride - 2*pad + kh``.
    """
    y, kernels = _lift(y), _lift(kernels)
    batched = _batched(y, "conv_transpose2d")
    if kernels.ndim != 4 or kernels.shape[0] != y.shape[-3]:
        raise ShapeError(f"conv_transpose2d: kernels {kernels.shape} do not match input {y.shape}")
    if stride < 1 or pad < 0:
        raise ShapeError("conv_transpose2d: stride must be >= 1 and pad >= 0")
    kh, kw = kernels.shape[2], kernels.shape[3]
    h = (y.shape[-2] - 1) * stride - 2 * pad + kh
    w = (y.shape[-1] - 1) * stride - 2 * pad + kw
    if h < 1 or w < 1:
        raise ShapeError(f"conv_transpose2d: non-positive output extent ({h}, {w})")
    y4 = y.data if batched else y.data[None]
    out = _conv_adjoint(y4, kernels.data, (h, w), stride, pad)

    def grad_fn(g):
        g4 = g if batched else g[None]
        gy = _conv_forward(g4, kernels.data, stride, pad)
        gk = _kernel_grad(g4, y4, kernels.shape, stride, pad)
        return (gy if batched else gy[0]), gk

    return Tensor._from_op(out if batched else out[0], (y, kernels), grad_fn, "conv_transpose2d")


# -- reductions --------------------------------------------------------------


def _norm_axis(axis, ndim: int) -> tuple[int, ...] | None:
    if axis is None:
        return None
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ShapeError(f"axis {ax} out of range for rank {ndim}")
        out.append(ax % ndim)
    return tuple(sorted(set(out)))


def _check_nonempty(a: Tensor, axes) -> None:
    if a.size == 0 or (axes is not None and any(a.shape[ax] == 0 for ax in axes)):
        raise DomainError("empty reduction")


def _expand(g: np.ndarray, shape: tuple[int, ...], axes, keepdims: bool) -> np.ndarray:
    if axes is None:
        return np.broadcast_to(np.reshape(g, (1,) * len(shape)), shape)
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = _lift(a)
    axes = _norm_axis(axis, a.ndim)
    _check_nonempty(a, axes)
    out = a.data.sum(axis=axes, keepdims=keepdims)
    return Tensor._from_op(out, (a,), lambda g: (np.array(_expand(g, a.shape, axes, keepdims)),), "sum")


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    axes = _norm_axis(axis, a.ndim)
    _check_nonempty(a, axes)
    count = a.size if axes is None else math.prod(a.shape[ax] for ax in axes)
    out = a.data.mean(axis=axes, keepdims=keepdims)
    return Tensor._from_op(out, (a,), lambda g: (np.array(_expand(g, a.shape, axes, keepdims)) / count,), "mean")


def _arg_extreme(a: Tensor, axis, keepdims: bool, pick: Callable, name: str) -> Tensor:
    if axis is not None and not isinstance(axis, int):
        raise ShapeError(f"{name} reduces over a single axis")
    axes = _norm_axis(axis, a.ndim)
    _check_nonempty(a, axes)
    if axes is None:
        flat = pick(a.data.reshape(-1))
        out = a.data.reshape(-1)[flat]
        if keepdims:
            out = np.reshape(out, (1,) * a.ndim)

        def grad_fn(g):
            gx = np.zeros(a.size)
            gx[flat] = np.reshape(g, ())
            return (gx.reshape(a.shape),)

        return Tensor._from_op(np.asarray(out), (a,), grad_fn, name)

    ax = axes[0]
    idx = np.expand_dims(pick(a.data, axis=ax), ax)
    out = np.take_along_axis(a.data, idx, axis=ax)
    if not keepdims:
        out = np.squeeze(out, axis=ax)

    def grad_fn(g):
        gx = np.zeros(a.shape)
        gk = g if keepdims else np.expand_dims(g, ax)
        np.put_along_axis(gx, idx, gk, axis=ax)
        return (gx,)

    return Tensor._from_op(out, (a,), grad_fn, name)


def amin(a, axis=None, keepdims: bool = False) -> Tensor:
    """Minimum; the gradient goes to the first achieving element only."""
    return _arg_extreme(_lift(a), axis, keepdims, np.argmin, "min")


def amax(a, axis=None, keepdims: bool = False) -> Tensor:
    """Maximum; the gradient goes to the first achieving element only."""
    return _arg_extreme(_lift(a), axis, keepdims, np.argmax, "max")


def logsumexp(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _lift(a)
    if axis is not None and not isinstance(axis, int):
        raise ShapeError("logsumexp reduces over a single axis")
    axes = _norm_axis(axis, a.ndim)
    _check_nonempty(a, axes)
    m = a.data.max(axis=axes, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    shifted = np.exp(a.data - m)
    s = shifted.sum(axis=axes, keepdims=True)
    out_k = m + np.log(s)
    soft = shifted / s
    out = out_k if keepdims else (out_k.reshape(()) if axes is None else np.squeeze(out_k, axis=axes))

    def grad_fn(g):
        return (np.array(_expand(g, a.shape, axes, keepdims)) * soft,)

    return Tensor._from_op(out, (a,), grad_fn, "logsumexp")


_REDUCERS = {"sum": sum, "mean": mean, "min": amin, "max": amax, "logsumexp": logsumexp}


def reduce(op: str, a, axis=None) -> Tensor:
    """Dispatch a reduction by name (sum, mean, min, max, logsumexp)."""
    try:
        fn = _REDUCERS[op]
    except KeyError:
        raise UsageError(f"unknown reduction {op!r}") from None
    return fn(a, axis)


# -- shape manipulation ----------------------------------------------------


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = _lift(a)
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    return Tensor._from_op(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = tuple(_lift(t) for t in tensors)
    if not ts:
        raise ShapeError("concat of nothing")
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    bounds = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._from_op(out, ts, grad_fn, "concat")


def stack(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [_lift(t) for t in tensors]
    if not ts:
        raise ShapeError("stack of nothing")
    shape = ts[0].shape
    for t in ts:
        if t.shape != shape:
            raise ShapeError(f"stack: shape {t.shape} != {shape}")
    ax = axis % (len(shape) + 1)
    expanded = [reshape(t, shape[:ax] + (1,) + shape[ax:]) for t in ts]
    return concat(expanded, axis=ax)


def _index(a: Tensor, key) -> Tensor:
    out = a.data[key]

    def grad_fn(g):
        gx = np.zeros(a.shape)
        np.add.at(gx, key, g)
        return (gx,)

    return Tensor._from_op(np.array(out), (a,), grad_fn, "index")


def take(a, indices, axis: int = 0) -> Tensor:
    """Select entries along ``axis``; repeated indices accumulate gradient."""
    a = _lift(a)
    idx = np.asarray(indices, dtype=np.intp)
    key = (slice(None),) * (axis % a.ndim) + (idx,)
    return _index(a, key)
