"""Dense tensors with reverse-mode differentiation.

A :class:`Tensor` wraps a contiguous numpy array (float32 by default,
float64 for gradient checking) and optionally records the operation that
produced it. Calling :meth:`Tensor.backward` on a scalar result walks the
recorded graph in reverse topological order and accumulates gradients into
every leaf created with ``requires_grad=True``.

Binary operations never broadcast: operands must have identical shapes.
"""

from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from ssrgan.errors import ContractError, ShapeError

DEFAULT_DTYPE = np.float32
_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """N-dimensional array node of a differentiable computation graph.

    Leaves created with ``requires_grad=True`` act as trainable parameters:
    their ``grad`` slot is allocated at construction and accumulates across
    :meth:`backward` calls until :func:`zero_grads` resets it.
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 dtype=None, _parents: tuple = (), _backward: Callable | None = None,
                 _op: str = "leaf"):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = _parents
        self._backward = _backward
        self._op = _op
        self.grad = np.zeros_like(self.data) if (requires_grad and _backward is None) else None

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data, dtype=self.dtype)

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, op={self._op}{tag})"

    def __len__(self):
        return self.shape[0]

    # -- operators -----------------------------------------------------
    def __add__(self, other):
        return add(self, other) if isinstance(other, Tensor) else scalar_add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other) if isinstance(other, Tensor) else scalar_add(self, -other)

    def __rsub__(self, other):
        return scalar_add(scalar_mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other) if isinstance(other, Tensor) else scalar_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def sum(self):
        return sum_all(self)

    def mean(self):
        return mean_all(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def backward(self):
        backward(self)


Parameter = Tensor


def _wrap(data, parents: Sequence[Tensor], backward_fn, op: str) -> Tensor:
    """Create an op result; records the graph only when a parent needs grads."""
    track = _grad_enabled and any(p.requires_grad for p in parents)
    if not track:
        return Tensor(data, dtype=data.dtype if isinstance(data, np.ndarray) else None)
    return Tensor(data, requires_grad=True, dtype=np.asarray(data).dtype,
                  _parents=tuple(parents), _backward=backward_fn, _op=op)


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape} (no broadcasting)")


# -- construction ------------------------------------------------------

def _validate_shape(shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    shape = tuple(int(s) for s in shape)
    if not shape or any(s <= 0 for s in shape):
        raise ShapeError(f"invalid shape {shape}: extents must be positive")
    return shape


def zeros(shape, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.zeros(_validate_shape(shape), dtype), requires_grad=requires_grad)


def ones(shape, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.ones(_validate_shape(shape), dtype), requires_grad=requires_grad)


def full(shape, value: float, dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    return Tensor(np.full(_validate_shape(shape), value, dtype), requires_grad=requires_grad)


def uniform(shape, lo: float, hi: float, rng: np.random.Generator,
            dtype=DEFAULT_DTYPE, requires_grad=False) -> Tensor:
    """I.i.d. draws from ``[lo, hi)``."""
    shape = _validate_shape(shape)
    if not lo < hi:
        raise ValueError(f"uniform requires lo < hi, got lo={lo}, hi={hi}")
    u = rng.random(shape, dtype=np.float64)
    vals = (lo + (hi - lo) * u).astype(dtype)
    # rounding to a narrower dtype can land exactly on hi
    np.minimum(vals, np.nextafter(dtype(hi), dtype(lo)), out=vals)
    return Tensor(vals, requires_grad=requires_grad)


def zeros_like(t: Tensor) -> Tensor:
    return Tensor(np.zeros_like(t.data))


def tensor_new(shape, init: str = "zeros", *, value: float | None = None,
               lo: float = 0.0, hi: float = 1.0, rng=None, dtype=DEFAULT_DTYPE,
               requires_grad: bool = False) -> Tensor:
    """Single entry point over the constructors: ``init`` is one of
    ``zeros``, ``ones``, ``constant`` (with ``value``) or ``uniform``
    (with ``lo``, ``hi`` and ``rng``)."""
    if init == "zeros":
        return zeros(shape, dtype, requires_grad)
    if init == "ones":
        return ones(shape, dtype, requires_grad)
    if init == "constant":
        if value is None:
            raise ValueError("constant init needs a value")
        return full(shape, value, dtype, requires_grad)
    if init == "uniform":
        if rng is None:
            raise ValueError("uniform init needs an rng")
        return uniform(shape, lo, hi, rng, dtype, requires_grad)
    raise ValueError(f"unknown init {init!r}")


# -- elementwise -------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")
    return _wrap(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")
    return _wrap(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "mul")
    return _wrap(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "mul")


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = a.dtype.type(c)
    return _wrap(a.data * c, (a,), lambda g: (g * c,), "scalar_mul")


def scalar_add(a: Tensor, c: float) -> Tensor:
    c = a.dtype.type(c)
    return _wrap(a.data + c, (a,), lambda g: (g,), "scalar_add")


def elementwise(op: str, a: Tensor, b) -> Tensor:
    """Dispatch by name: add, sub, mul, scalar_mul, scalar_add."""
    table = {"add": add, "sub": sub, "mul": mul,
             "scalar_mul": scalar_mul, "scalar_add": scalar_add}
    if op not in table:
        raise ValueError(f"unknown elementwise op {op!r}")
    return table[op](a, b)


# -- reductions and reshaping -----------------------------------------

def sum_all(a: Tensor) -> Tensor:
    return _wrap(np.asarray(a.data.sum(), dtype=a.dtype), (a,),
                 lambda g: (np.full(a.shape, g, dtype=a.dtype),), "sum")


def mean_all(a: Tensor) -> Tensor:
    n = a.size
    return _wrap(np.asarray(a.data.mean(), dtype=a.dtype), (a,),
                 lambda g: (np.full(a.shape, g / n, dtype=a.dtype),), "mean")


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    out = a.data.reshape(shape)
    return _wrap(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean of squared differences over all elements."""
    _check_same_shape(a, b, "mse")
    if a.size == 0:
        raise ShapeError("mse of empty tensors")
    diff = a.data - b.data
    n = diff.size
    val = np.asarray(np.mean(diff * diff), dtype=a.dtype)

    def bw(g):
        ga = (2.0 * g / n) * diff
        return ga.astype(a.dtype, copy=False), (-ga).astype(b.dtype, copy=False)

    return _wrap(val, (a, b), bw, "mse")


# -- differentiation --------------------------------------------------

def _topological(root: Tensor) -> list:
    order, seen = [], set()
    stack = [(root, False)]
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
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into every reachable leaf's ``grad``.

    Gradients add onto whatever the leaf already holds, so two calls without
    :func:`zero_grads` in between double the stored gradient.
    """
    if root.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return
    grads = {id(root): np.ones_like(root.data)}
    for node in reversed(_topological(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad += g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
        else:
            p.grad.fill(0)


def all_finite(arrays: Iterable[np.ndarray]) -> bool:
    return all(bool(np.isfinite(a).all()) for a in arrays)


def ulp_distance(a: float, b: float, dtype=np.float32) -> float:
    """Distance between two values in units of ``dtype``'s last place at ``a``."""
    a = dtype(a)
    spacing = np.spacing(np.abs(a)) if a != 0 else np.finfo(dtype).tiny
    return math.fabs(float(a) - float(dtype(b))) / float(spacing)
