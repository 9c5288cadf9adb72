"""Reverse-mode gradient tape over dense float64 arrays.

A Tape records primitive operations (matmul, add, mul, sigmoid, tanh,
relu, concat, row gather, sum, masked reductions) as Tensor nodes in
creation order, which is already a topological order. backward() walks
the record in exact reverse order, accumulating vector-Jacobian
products into each node's grad buffer.

Masking is a first-class primitive here: reductions and the
hidden-state carry take an explicit validity mask, so masked positions
receive exactly zero gradient and sentinel values never enter the math.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class GradientNaNError(FloatingPointError):
    """A NaN appeared during the backward pass; names the producing node."""


def _as_f64(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    return arr


class Tensor:
    """One node of the tape: a value plus backward rules to its parents."""

    __slots__ = ("value", "tape", "parents", "vjps", "name", "grad", "_index")

    def __init__(
        self,
        value: np.ndarray,
        tape: "Tape | None",
        parents: tuple["Tensor", ...] = (),
        vjps: tuple[Callable[[np.ndarray], np.ndarray], ...] = (),
        name: str = "",
    ) -> None:
        self.value = _as_f64(value)
        self.tape = tape
        self.parents = parents
        self.vjps = vjps
        self.name = name
        self.grad: np.ndarray | None = None
        self._index = -1
        if tape is not None:
            tape._register(self)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Tensor(name={self.name!r}, shape={self.value.shape})"


class Tape:
    """Topologically ordered operation record with parameter tracking."""

    def __init__(self) -> None:
        self._nodes: list[Tensor] = []
        self._params: dict[str, Tensor] = {}

    def _register(self, node: Tensor) -> None:
        node._index = len(self._nodes)
        self._nodes.append(node)

    def parameter(self, name: str, value: np.ndarray) -> Tensor:
        """Create a leaf tensor whose gradient is reported by backward."""
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        node = Tensor(value, self, name=name)
        self._params[name] = node
        return node

    def constant(self, value) -> Tensor:
        """Create a leaf tensor that still receives (ignored) gradients."""
        return Tensor(value, self, name="const")

    def backward(self, loss: Tensor) -> dict[str, np.ndarray]:
        """Accumulate d(loss)/d(parameter) for every registered parameter.

        Gradients of parameters not reachable from loss are zero arrays.
        Raises GradientNaNError naming the node that produced a NaN.
        """
        if loss.tape is not self:
            raise ValueError("loss tensor does not belong to this tape")
        if loss.value.shape != ():
            raise ValueError(f"loss must be scalar, got shape {loss.value.shape}")
        if not np.isfinite(loss.value):
            raise GradientNaNError("loss value is not finite")
        for node in self._nodes:
            node.grad = None
        loss.grad = np.ones((), dtype=np.float64)
        for node in reversed(self._nodes[: loss._index + 1]):
            grad = node.grad
            if grad is None:
                continue
            if np.isnan(grad).any():
                raise GradientNaNError(
                    f"NaN gradient at node {node.name!r} (shape {node.value.shape})"
                )
            for parent, vjp in zip(node.parents, node.vjps):
                contribution = vjp(grad)
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.value)
                parent.grad = parent.grad + contribution
        out = {}
        for name, param in self._params.items():
            out[name] = (
                param.grad if param.grad is not None else np.zeros_like(param.value)
            )
        return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to `shape` after numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(k for k, n in enumerate(shape) if n == 1 and grad.shape[k] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _binary(a: Tensor, b: Tensor, value, vjp_a, vjp_b, name: str) -> Tensor:
    tape = a.tape or b.tape
    return Tensor(value, tape, parents=(a, b), vjps=(vjp_a, vjp_b), name=name)


def add(a: Tensor, b: Tensor) -> Tensor:
    value = a.value + b.value
    return _binary(
        a, b, value,
        lambda g: _unbroadcast(g, a.value.shape),
        lambda g: _unbroadcast(g, b.value.shape),
        "add",
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    value = a.value - b.value
    return _binary(
        a, b, value,
        lambda g: _unbroadcast(g, a.value.shape),
        lambda g: _unbroadcast(-g, b.value.shape),
        "sub",
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    value = a.value * b.value
    return _binary(
        a, b, value,
        lambda g: _unbroadcast(g * b.value, a.value.shape),
        lambda g: _unbroadcast(g * a.value, b.value.shape),
        "mul",
    )


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a plain float constant."""
    return Tensor(a.value * c, a.tape, parents=(a,), vjps=(lambda g: g * c,), name="scale")


def shift(a: Tensor, c: float) -> Tensor:
    """Add a plain float constant."""
    return Tensor(a.value + c, a.tape, parents=(a,), vjps=(lambda g: g,), name="shift")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    value = a.value @ b.value
    return _binary(
        a, b, value,
        lambda g: g @ b.value.T,
        lambda g: a.value.T @ g,
        "matmul",
    )


def sigmoid(a: Tensor) -> Tensor:
    # exp(-|a|) never overflows, so both np.where branches stay finite
    # for any input magnitude
    e = np.exp(-np.abs(a.value))
    value = np.where(a.value >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return Tensor(
        value, a.tape, parents=(a,),
        vjps=(lambda g: g * value * (1.0 - value),), name="sigmoid",
    )


def tanh(a: Tensor) -> Tensor:
    value = np.tanh(a.value)
    return Tensor(
        value, a.tape, parents=(a,),
        vjps=(lambda g: g * (1.0 - value * value),), name="tanh",
    )


def relu(a: Tensor) -> Tensor:
    value = np.maximum(a.value, 0.0)
    gate = (a.value > 0).astype(np.float64)
    return Tensor(value, a.tape, parents=(a,), vjps=(lambda g: g * gate,), name="relu")


def square(a: Tensor) -> Tensor:
    return Tensor(
        a.value * a.value, a.tape, parents=(a,),
        vjps=(lambda g: g * 2.0 * a.value,), name="square",
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along an axis; zero-width inputs contribute nothing."""
    parts = list(tensors)
    value = np.concatenate([t.value for t in parts], axis=axis)
    sizes = [t.value.shape[axis] for t in parts]
    offsets = np.cumsum([0] + sizes)
    vjps = []
    for k, t in enumerate(parts):
        lo, hi = offsets[k], offsets[k + 1]

        def vjp(g: np.ndarray, lo=lo, hi=hi) -> np.ndarray:
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return g[tuple(index)]

        vjps.append(vjp)
    tape = next((t.tape for t in parts if t.tape is not None), None)
    return Tensor(value, tape, parents=tuple(parts), vjps=tuple(vjps), name="concat")


def take_rows(table: Tensor, indices: np.ndarray) -> Tensor:
    """Gather rows of a 2-D table (embedding lookup); scatter-add backward."""
    idx = np.asarray(indices, dtype=np.intp)
    value = table.value[idx]

    def vjp(g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(table.value)
        np.add.at(out, idx, g)
        return out

    return Tensor(value, table.tape, parents=(table,), vjps=(vjp,), name="take_rows")


def total_sum(a: Tensor) -> Tensor:
    value = np.asarray(a.value.sum())
    return Tensor(
        value, a.tape, parents=(a,),
        vjps=(lambda g: g * np.ones_like(a.value),), name="sum",
    )


def masked_sum(a: Tensor, mask: np.ndarray) -> Tensor:
    """Sum of entries where mask is true; masked entries get zero gradient."""
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != a.value.shape:
        m = np.broadcast_to(m, a.value.shape)
    value = np.asarray((a.value * m).sum())
    return Tensor(
        value, a.tape, parents=(a,),
        vjps=(lambda g: g * m,), name="masked_sum",
    )


def masked_mean(a: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over entries where mask is true."""
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != a.value.shape:
        m = np.broadcast_to(m, a.value.shape)
    count = m.sum()
    if count == 0:
        raise ValueError("masked_mean over an empty mask")
    value = np.asarray((a.value * m).sum() / count)
    return Tensor(
        value, a.tape, parents=(a,),
        vjps=(lambda g: g * m / count,), name="masked_mean",
    )


def masked_carry(new: Tensor, prev: Tensor, mask: np.ndarray) -> Tensor:
    """Select new where mask is true, else carry prev (hidden-state update).

    mask has one entry per row; it broadcasts over the feature axis.
    """
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim == new.value.ndim - 1:
        m = m[..., None]
    m = np.broadcast_to(m, new.value.shape)
    value = m * new.value + (1.0 - m) * prev.value
    return _binary(
        new, prev, value,
        lambda g: g * m,
        lambda g: g * (1.0 - m),
        "masked_carry",
    )
