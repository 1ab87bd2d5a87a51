"""
Dense tensors with tape-based reverse-mode differentiation.

A Tape records every primitive whose inputs include a tracked tensor, in
creation order. Creation order is a topological order of the graph, so the
backward pass simply walks the record in reverse.
"""
import math
import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from petforge.core.errors import ContractError, DimensionError

Number = Union[int, float]
GradFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_state = threading.local()


def current_tape() -> Optional['Tape']:
    """Innermost active tape of this thread, if any."""
    stack = getattr(_state, 'tapes', None)
    return stack[-1] if stack else None


class Tensor:
    """Immutable n-dimensional float array, optionally tracked by a tape."""

    __slots__ = ('data', 'requires_grad', 'name')

    def __init__(self, data, dtype=None, requires_grad: bool = False, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64) \
                else np.float64
        arr = np.array(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            raise DimensionError(f"unsupported tensor dtype {arr.dtype}")
        arr.flags.writeable = False
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray, requires_grad: bool) -> 'Tensor':
        out = cls.__new__(cls)
        if arr.flags.writeable:
            arr.flags.writeable = False
        out.data = arr
        out.requires_grad = requires_grad
        out.name = None
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        """Writable copy of the values."""
        return np.array(self.data)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> 'Tensor':
        return Tensor._wrap(self.data, False)

    def __repr__(self) -> str:
        flag = ', tracked' if self.requires_grad else ''
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # operators
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __truediv__(self, other): return div(self, other)
    def __rtruediv__(self, other): return div(other, self)
    def __neg__(self): return neg(self)
    def __pow__(self, exponent: Number): return power(self, exponent)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, index): return getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Tensor':
        return mean(self, axis, keepdims)

    def reshape(self, *shape) -> 'Tensor':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> 'Tensor':
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)


class _Node:
    __slots__ = ('output', 'parents', 'grad_fn')

    def __init__(self, output: Tensor, parents: Tuple[Tensor, ...], grad_fn: GradFn):
        self.output = output
        self.parents = parents
        self.grad_fn = grad_fn


class Tape:
    """Single-use record of primitive applications on one thread."""

    def __init__(self):
        self.nodes: List[_Node] = []
        self.roots: Dict[str, Tensor] = {}
        self.consumed = False

    def __enter__(self) -> 'Tape':
        stack = getattr(_state, 'tapes', None)
        if stack is None:
            stack = _state.tapes = []
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _state.tapes.remove(self)

    def watch(self, name: str, value) -> Tensor:
        """Register a tracked leaf under `name` and return it."""
        if name in self.roots:
            raise ContractError(f"'{name}' is already watched on this tape")
        data = value.data if isinstance(value, Tensor) else np.asarray(value)
        leaf = Tensor._wrap(data, True) if not data.flags.writeable else Tensor(data, requires_grad=True)
        leaf.name = name
        self.roots[name] = leaf
        return leaf

    def record(self, output: Tensor, parents: Tuple[Tensor, ...], grad_fn: GradFn):
        self.nodes.append(_Node(output, parents, grad_fn))

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor, tape: Optional[Tape] = None) -> Dict[str, Tensor]:
    """Gradients of a scalar loss for every watched root of `tape`."""
    tape = tape if tape is not None else current_tape()
    if tape is None:
        raise ContractError("backward needs a tape")
    if loss.size != 1:
        raise ContractError(f"loss must be a scalar, got shape {loss.shape}")
    if tape.consumed:
        raise ContractError("tape was already used for a backward pass")
    tape.consumed = True

    grads: Dict[int, np.ndarray] = {}
    if loss.requires_grad:
        grads[id(loss)] = np.ones(loss.shape, dtype=loss.dtype)

    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        for parent, pg in zip(node.parents, node.grad_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg

    result = {}
    for name, root in tape.roots.items():
        g = grads.get(id(root))
        if g is None:
            g = np.zeros(root.shape, dtype=root.dtype)
        result[name] = Tensor._wrap(np.asarray(g, dtype=root.dtype), False)
    return result


# ---------------------------------------------------------------------------
# helpers

def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    """Wrap constants with the dtype of `like` so float32 graphs stay float32."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _pair(a, b) -> Tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, a)
    b = as_tensor(b)
    return as_tensor(a, b), b


def _make(data: np.ndarray, parents: Sequence[Tensor], grad_fn: GradFn) -> Tensor:
    parents = tuple(parents)
    dtype = np.result_type(*[p.dtype for p in parents])
    arr = np.asarray(data, dtype=dtype)
    tape = current_tape()
    tracked = tape is not None and any(p.requires_grad for p in parents)
    out = Tensor._wrap(arr, tracked)
    if tracked:
        tape.record(out, parents, grad_fn)
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


# ---------------------------------------------------------------------------
# arithmetic

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _make(a.data + b.data, (a, b), lambda g: (
        unbroadcast(g, a.shape) if a.requires_grad else None,
        unbroadcast(g, b.shape) if b.requires_grad else None,
    ))


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _make(a.data - b.data, (a, b), lambda g: (
        unbroadcast(g, a.shape) if a.requires_grad else None,
        unbroadcast(-g, b.shape) if b.requires_grad else None,
    ))


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _make(a.data * b.data, (a, b), lambda g: (
        unbroadcast(g * b.data, a.shape) if a.requires_grad else None,
        unbroadcast(g * a.data, b.shape) if b.requires_grad else None,
    ))


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _make(a.data / b.data, (a, b), lambda g: (
        unbroadcast(g / b.data, a.shape) if a.requires_grad else None,
        unbroadcast(-g * a.data / (b.data * b.data), b.shape) if b.requires_grad else None,
    ))


def neg(a: Tensor) -> Tensor:
    return _make(-a.data, (a,), lambda g: (-g,))


def power(a: Tensor, exponent: Number) -> Tensor:
    exponent = float(exponent)
    return _make(a.data ** exponent, (a,),
                 lambda g: (g * exponent * a.data ** (exponent - 1.0),))


def matmul(a, b) -> Tensor:
    """Batched matrix product over the last two axes."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    try:
        np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    except ValueError:
        raise DimensionError(f"matmul batch extents do not broadcast: {a.shape} @ {b.shape}") from None

    def grad_fn(g):
        ga = unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape) if a.requires_grad else None
        gb = unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape) if b.requires_grad else None
        return ga, gb

    return _make(a.data @ b.data, (a, b), grad_fn)


# ---------------------------------------------------------------------------
# reductions and shape

def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axes(axis, a.ndim)

    def grad_fn(g):
        if not keepdims:
            g = np.expand_dims(g, axes) if axes else g
        return (np.broadcast_to(g, a.shape),)

    return _make(a.data.sum(axis=axes, keepdims=keepdims), (a,), grad_fn)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axes(axis, a.ndim)
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    return mul(tsum(a, axes, keepdims), 1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _make(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def swapaxes(a: Tensor, axis1: int, axis2: int) -> Tensor:
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(isinstance(i, (int, slice, type(None), type(Ellipsis))) for i in items)


def getitem(a: Tensor, index) -> Tensor:
    if isinstance(index, Tensor):
        index = index.data.astype(np.intp)
    basic = _is_basic_index(index)

    def grad_fn(g):
        full = np.zeros(a.shape, dtype=g.dtype)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return _make(a.data[index], (a,), grad_fn)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise DimensionError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise DimensionError(f"concat extents differ: {[x.shape for x in tensors]}")
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def grad_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tensors, grad_fn)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        data = np.broadcast_to(a.data, shape)
    except ValueError:
        raise DimensionError(f"cannot broadcast {a.shape} to {shape}") from None
    return _make(data, (a,), lambda g: (unbroadcast(g, a.shape),))


# ---------------------------------------------------------------------------
# elementwise

def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return _make(out, (a,), lambda g: (g * 0.5 / out,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _make(out, (a,), lambda g: (g * (1.0 - out * out),))


def sigmoid(a: Tensor) -> Tensor:
    """Logistic function kept strictly inside (0, 1)."""
    info = np.finfo(a.dtype)
    out = np.clip(0.5 * (1.0 + np.tanh(0.5 * a.data)), info.tiny, 1.0 - info.epsneg).astype(a.dtype)
    return _make(out, (a,), lambda g: (g * out * (1.0 - out),))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _make(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a: Tensor) -> Tensor:
    """Tanh approximation of the Gaussian error linear unit."""
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x ** 3)
    t = np.tanh(inner)

    def grad_fn(g):
        d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return _make(0.5 * x * (1.0 + t), (a,), grad_fn)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def grad_fn(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _make(out, (a,), grad_fn)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def grad_fn(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return _make(out, (a,), grad_fn)


def zeros(shape: Sequence[int], dtype=np.float64) -> Tensor:
    return Tensor(np.zeros(tuple(shape), dtype=dtype))
