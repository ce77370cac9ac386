"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` records the operation that produced it. ``backward`` walks the
graph in reverse topological order and accumulates ``grad`` on every tensor
that requires it.
"""


# Imports
from __future__ import annotations
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union
import threading

import numpy as np


# Constants
GELU_C = float(np.sqrt(2.0 / np.pi))
GELU_K = 0.044715


# Types
ArrayLike = Union[np.ndarray, float, int]
Backward = Callable[[np.ndarray], None]


_mode = threading.local()


def grad_enabled() -> bool:
    return getattr(_mode, 'enabled', True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording in the current thread."""
    previous = grad_enabled()
    _mode.enabled = False
    try:
        yield
    finally:
        _mode.enabled = previous


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An array with an optional gradient.

    Attributes
    ----------
    data : np.ndarray
        Values.
    grad : Optional[np.ndarray]
        Accumulated gradient, same shape as ``data``.
    requires_grad : bool
        Whether gradients flow to this tensor.
    """

    __array_priority__ = 1000

    def __init__(self, data: ArrayLike, requires_grad: bool = False,
                 dtype=None, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=dtype)
        if self.data.dtype.kind != 'f':
            self.data = self.data.astype(np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[Backward] = None

    def __repr__(self) -> str:
        label = f' {self.name}' if self.name else ''
        return f'Tensor{label}(shape={self.shape}, dtype={self.dtype})'

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def T(self) -> Tensor:
        return self.transpose()

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> Tensor:
        return Tensor(self.data, dtype=self.dtype)

    def zero_grad(self):
        self.grad = None

    def accumulate(self, grad: np.ndarray):
        grad = grad.astype(self.dtype, copy=False)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    # Graph construction

    def _wrap(self, other: Union[Tensor, ArrayLike]) -> Tensor:
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    @staticmethod
    def _result(data: np.ndarray, parents: Sequence[Tensor],
                backward: Backward) -> Tensor:
        out = Tensor(data)
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def backward(self, grad: Optional[np.ndarray] = None):
        """Backpropagate from this tensor.

        Parameters
        ----------
        grad : Optional[np.ndarray]
            Seed gradient; defaults to ones (a scalar loss).
        """
        if grad is None:
            grad = np.ones_like(self.data)
        order: List[Tensor] = []
        seen = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self.accumulate(np.asarray(grad))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # Interior gradients are not needed after use.
                if node._parents:
                    node.grad = None

    # Arithmetic

    def __add__(self, other) -> Tensor:
        other = self._wrap(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a.accumulate(unbroadcast(g, a.shape))
            if b.requires_grad:
                b.accumulate(unbroadcast(g, b.shape))
        return self._result(a.data + b.data, (a, b), backward)

    __radd__ = __add__

    def __neg__(self) -> Tensor:
        a = self

        def backward(g):
            a.accumulate(-g)
        return self._result(-a.data, (a,), backward)

    def __sub__(self, other) -> Tensor:
        return self + (-self._wrap(other))

    def __rsub__(self, other) -> Tensor:
        return self._wrap(other) + (-self)

    def __mul__(self, other) -> Tensor:
        other = self._wrap(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a.accumulate(unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                b.accumulate(unbroadcast(g * a.data, b.shape))
        return self._result(a.data * b.data, (a, b), backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Tensor:
        other = self._wrap(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                a.accumulate(unbroadcast(g / b.data, a.shape))
            if b.requires_grad:
                b.accumulate(unbroadcast(-g * a.data / b.data ** 2, b.shape))
        return self._result(a.data / b.data, (a, b), backward)

    def __rtruediv__(self, other) -> Tensor:
        return self._wrap(other) / self

    def __pow__(self, exponent: float) -> Tensor:
        a = self

        def backward(g):
            a.accumulate(g * exponent * a.data ** (exponent - 1))
        return self._result(a.data ** exponent, (a,), backward)

    def __matmul__(self, other) -> Tensor:
        other = self._wrap(other)
        a, b = self, other

        def backward(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2) if b.ndim > 1 \
                    else np.multiply.outer(g, b.data)
                a.accumulate(unbroadcast(ga, a.shape))
            if b.requires_grad:
                if a.ndim == 1:
                    gb = np.multiply.outer(a.data, g)
                else:
                    gb = np.swapaxes(a.data, -1, -2) @ g
                b.accumulate(unbroadcast(gb, b.shape))
        return self._result(a.data @ b.data, (a, b), backward)

    # Reductions and shape

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        a = self

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a.accumulate(np.broadcast_to(g, a.shape))
        return self._result(a.data.sum(axis=axis, keepdims=keepdims), (a,),
                            backward)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        count = self.data.size if axis is None else np.prod(
            [self.shape[i] for i in np.atleast_1d(axis)]
        )
        return self.sum(axis, keepdims) / float(count)

    def reshape(self, *shape) -> Tensor:
        a = self

        def backward(g):
            a.accumulate(g.reshape(a.shape))
        return self._result(a.data.reshape(*shape), (a,), backward)

    def transpose(self, *axes) -> Tensor:
        a = self
        axes = axes or tuple(reversed(range(self.ndim)))
        inverse = np.argsort(axes)

        def backward(g):
            a.accumulate(np.transpose(g, inverse))
        return self._result(np.transpose(a.data, axes), (a,), backward)

    def swapaxes(self, i: int, j: int) -> Tensor:
        axes = list(range(self.ndim))
        axes[i], axes[j] = axes[j], axes[i]
        return self.transpose(*axes)

    def __getitem__(self, index) -> Tensor:
        a = self

        def backward(g):
            full = np.zeros_like(a.data)
            np.add.at(full, index, g)
            a.accumulate(full)
        return self._result(a.data[index], (a,), backward)

    # Elementwise

    def exp(self) -> Tensor:
        a = self
        out = np.exp(a.data)

        def backward(g):
            a.accumulate(g * out)
        return self._result(out, (a,), backward)

    def log(self) -> Tensor:
        a = self

        def backward(g):
            a.accumulate(g / a.data)
        return self._result(np.log(a.data), (a,), backward)

    def tanh(self) -> Tensor:
        a = self
        out = np.tanh(a.data)

        def backward(g):
            a.accumulate(g * (1.0 - out ** 2))
        return self._result(out, (a,), backward)

    def sigmoid(self) -> Tensor:
        a = self
        out = np.exp(-np.logaddexp(0.0, -a.data)).astype(a.dtype)

        def backward(g):
            a.accumulate(g * out * (1.0 - out))
        return self._result(out, (a,), backward)

    def relu(self) -> Tensor:
        return self.leaky_relu(0.0)

    def leaky_relu(self, slope: float = 0.01) -> Tensor:
        a = self
        scale = np.where(a.data > 0, 1.0, slope).astype(a.dtype)

        def backward(g):
            a.accumulate(g * scale)
        return self._result(a.data * scale, (a,), backward)

    def gelu(self) -> Tensor:
        """GELU, tanh approximation."""
        a = self
        x = a.data
        t = np.tanh(GELU_C * (x + GELU_K * x ** 3))

        def backward(g):
            dt = (1.0 - t ** 2) * GELU_C * (1.0 + 3.0 * GELU_K * x ** 2)
            a.accumulate(g * (0.5 * (1.0 + t) + 0.5 * x * dt))
        return self._result(0.5 * x * (1.0 + t), (a,), backward)

    def clip(self, lo: float, hi: float) -> Tensor:
        """Clamp values; the gradient is zero where clamped."""
        a = self
        inside = ((a.data >= lo) & (a.data <= hi)).astype(a.dtype)

        def backward(g):
            a.accumulate(g * inside)
        return self._result(np.clip(a.data, lo, hi), (a,), backward)

    # Fused

    def softmax(self, axis: int = -1) -> Tensor:
        a = self
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=axis, keepdims=True)

        def backward(g):
            a.accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))
        return self._result(out, (a,), backward)

    def log_softmax(self, axis: int = -1) -> Tensor:
        a = self
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

        def backward(g):
            a.accumulate(
                g - np.exp(out) * g.sum(axis=axis, keepdims=True)
            )
        return self._result(out, (a,), backward)

    def dropout(self, rate: float, rng: np.random.Generator,
                training: bool = True) -> Tensor:
        if not training or rate <= 0.0:
            return self
        keep = (rng.random(self.shape) >= rate).astype(self.dtype)
        return self * (keep / (1.0 - rate))


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor,
               eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then scale and shift."""
    n = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv
    out = xhat * gamma.data + beta.data

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate(unbroadcast(g * xhat, gamma.shape))
        if beta.requires_grad:
            beta.accumulate(unbroadcast(g, beta.shape))
        if x.requires_grad:
            dxhat = g * gamma.data
            x.accumulate(inv / n * (
                n * dxhat
                - dxhat.sum(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
            ))
    return Tensor._result(out.astype(x.dtype), (x, gamma, beta), backward)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of ``weight``."""
    return weight[np.asarray(ids, dtype=np.int64)]


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t.accumulate(g[tuple(index)])
    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._result(data, tuple(tensors), backward)
