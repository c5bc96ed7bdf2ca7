"""Reverse-mode automatic differentiation over float64 numpy arrays.

Minimal tape-based engine: a `Tensor` wraps an ndarray and remembers how it
was produced; `backward()` walks the tape in reverse topological order and
accumulates gradients into every tensor created with `requires_grad=True`.
Only the operations needed by the parser are implemented.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Union

import numpy as np

ArrayLike = Union[np.ndarray, float, int]


def _as_array(value: ArrayLike) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out axes that were broadcast so grad matches the original shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        backward: Optional[Callable[[np.ndarray], None]] = None,
    ):
        self.data = _as_array(data)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, seed: Optional[np.ndarray] = None) -> None:
        if seed is None:
            if self.data.size != 1:
                raise ValueError("backward() without seed requires a scalar tensor")
            seed = np.ones_like(self.data)
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited or not node.requires_grad:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.accumulate(seed)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        other = as_tensor(other)
        out_data = self.data + other.data
        need = self.requires_grad or other.requires_grad
        if not need:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self, other))

        def backward(g: np.ndarray) -> None:
            if self.requires_grad:
                self.accumulate(_unbroadcast(g, self.data.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g, other.data.shape))

        out._backward = backward
        return out

    __radd__ = __add__

    def __mul__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        other = as_tensor(other)
        out_data = self.data * other.data
        need = self.requires_grad or other.requires_grad
        if not need:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self, other))

        def backward(g: np.ndarray) -> None:
            if self.requires_grad:
                self.accumulate(_unbroadcast(g * other.data, self.data.shape))
            if other.requires_grad:
                other.accumulate(_unbroadcast(g * self.data, other.data.shape))

        out._backward = backward
        return out

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        return self + (as_tensor(other) * -1.0)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other) + (self * -1.0)

    def __truediv__(self, scalar: float) -> "Tensor":
        return self * (1.0 / float(scalar))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        other = as_tensor(other)
        out_data = np.matmul(self.data, other.data)
        need = self.requires_grad or other.requires_grad
        if not need:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self, other))

        def backward(g: np.ndarray) -> None:
            a, b = self.data, other.data
            if self.requires_grad:
                if b.ndim == 1:
                    ga = np.multiply.outer(g, b) if a.ndim > 1 else g * b
                else:
                    ga = np.matmul(g, np.swapaxes(b, -1, -2)) if a.ndim > 1 else np.matmul(b, g)
                self.accumulate(_unbroadcast(ga, a.shape))
            if other.requires_grad:
                if a.ndim == 1:
                    gb = np.multiply.outer(a, g) if b.ndim > 1 else g * a
                else:
                    gg = g[..., None] if g.ndim == a.ndim - 1 else g
                    gb = np.matmul(np.swapaxes(a, -1, -2), gg)
                    if gg is not g:
                        gb = gb[..., 0]
                other.accumulate(_unbroadcast(gb, b.shape))

        out._backward = backward
        return out

    # -- shape manipulation -------------------------------------------------

    def reshape(self, *shape: int) -> "Tensor":
        out_data = self.data.reshape(shape)
        if not self.requires_grad:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self,))
        out._backward = lambda g: self.accumulate(g.reshape(self.data.shape))
        return out

    def transpose(self, *axes: int) -> "Tensor":
        perm = axes or tuple(reversed(range(self.data.ndim)))
        out_data = self.data.transpose(perm)
        if not self.requires_grad:
            return Tensor(out_data)
        inverse = np.argsort(perm)
        out = Tensor(out_data, True, (self,))
        out._backward = lambda g: self.accumulate(g.transpose(inverse))
        return out

    def __getitem__(self, key) -> "Tensor":
        out_data = self.data[key]
        if not self.requires_grad:
            return Tensor(np.array(out_data))
        out = Tensor(np.array(out_data), True, (self,))

        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, key, g)
            self.accumulate(full)

        out._backward = backward
        return out

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out_data = self.data.sum(axis=axis, keepdims=keepdims)
        if not self.requires_grad:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self,))

        def backward(g: np.ndarray) -> None:
            if axis is None:
                self.accumulate(np.broadcast_to(g, self.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                self.accumulate(np.broadcast_to(gg, self.data.shape).copy())

        out._backward = backward
        return out

    # -- nonlinearities -----------------------------------------------------

    def relu(self) -> "Tensor":
        out_data = np.maximum(self.data, 0.0)
        if not self.requires_grad:
            return Tensor(out_data)
        out = Tensor(out_data, True, (self,))
        out._backward = lambda g: self.accumulate(g * (self.data > 0.0))
        return out


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: ArrayLike) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    if not any(t.requires_grad for t in tensors):
        return Tensor(out_data)
    out = Tensor(out_data, True, tuple(tensors))

    def backward(g: np.ndarray) -> None:
        offset = 0
        for t in tensors:
            size = t.data.shape[axis]
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(offset, offset + size)
            if t.requires_grad:
                t.accumulate(g[tuple(sl)])
            offset += size

    out._backward = backward
    return out


def window_sum(x: Tensor, window: int) -> Tensor:
    """Sum each row with its neighbours up to `window` positions away.

    The operator is symmetric, so the backward pass is the same window sum
    applied to the incoming gradient.
    """

    def apply(a: np.ndarray) -> np.ndarray:
        out = a.copy()
        for delta in range(1, window + 1):
            out[delta:] += a[:-delta]
            out[:-delta] += a[delta:]
        return out

    out_data = apply(x.data)
    if not x.requires_grad:
        return Tensor(out_data)
    out = Tensor(out_data, True, (x,))
    out._backward = lambda g: x.accumulate(apply(g))
    return out


def einsum(subscripts: str, *tensors: Tensor) -> Tensor:
    """Einstein summation; every index of each operand must also appear in
    another operand or the output (true for all uses in this package)."""
    inputs, output = subscripts.replace(" ", "").split("->")
    in_subs = inputs.split(",")
    datas = [t.data for t in tensors]
    out_data = np.einsum(subscripts, *datas)
    if not any(t.requires_grad for t in tensors):
        return Tensor(out_data)
    out = Tensor(out_data, True, tuple(tensors))

    def backward(g: np.ndarray) -> None:
        for i, t in enumerate(tensors):
            if not t.requires_grad:
                continue
            others = [s for j, s in enumerate(in_subs) if j != i]
            other_data = [d for j, d in enumerate(datas) if j != i]
            grad_subs = ",".join([output] + others) + "->" + in_subs[i]
            t.accumulate(np.einsum(grad_subs, g, *other_data))

    out._backward = backward
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_cross_entropy(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Elementwise binary cross-entropy from raw scores, computed in log space."""
    x = logits.data
    t = _as_array(targets)
    out_data = np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))
    if not logits.requires_grad:
        return Tensor(out_data)
    out = Tensor(out_data, True, (logits,))
    out._backward = lambda g: logits.accumulate(g * (_sigmoid(x) - t))
    return out


def softmax_cross_entropy(logits: Tensor, target_ids: np.ndarray) -> Tensor:
    """Per-row cross-entropy of a (rows, classes) score matrix, in log space."""
    x = logits.data
    ids = np.asarray(target_ids, dtype=np.intp)
    shift = x - x.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shift).sum(axis=-1)) + x.max(axis=-1)
    rows = np.arange(x.shape[0])
    out_data = logz - x[rows, ids]
    if not logits.requires_grad:
        return Tensor(out_data)
    out = Tensor(out_data, True, (logits,))

    def backward(g: np.ndarray) -> None:
        soft = np.exp(shift)
        soft /= soft.sum(axis=-1, keepdims=True)
        soft[rows, ids] -= 1.0
        logits.accumulate(soft * g[..., None])

    out._backward = backward
    return out
