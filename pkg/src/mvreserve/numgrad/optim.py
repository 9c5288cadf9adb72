"""Parameter store, He initialization, and the AMSGRAD optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    """An optimizer step received a non-finite gradient."""


def he_init(shape: tuple[int, ...], rng: np.random.Generator, fan_in: int | None = None) -> np.ndarray:
    """He-normal sample: i.i.d. Normal(0, 2 / fan_in).

    fan_in defaults to the first axis length (input features of a
    weight matrix used as x @ W), or the length of a vector.
    """
    if fan_in is None:
        fan_in = int(shape[0])
    if fan_in < 1:
        raise ValueError(f"fan_in must be >= 1, got {fan_in}")
    std = np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, std, size=shape).astype(np.float64)


@dataclass
class ParameterStore:
    """Named parameter arrays plus AMSGRAD moment accumulators."""

    params: dict[str, np.ndarray] = field(default_factory=dict)
    step_count: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)
    max_second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.params:
            raise ValueError(f"duplicate parameter {name!r}")
        self.params[name] = np.asarray(value, dtype=np.float64)

    def reset_optimizer_state(self) -> None:
        """Clear moments and the step counter (fresh optimizer)."""
        self.step_count = 0
        self.first_moment.clear()
        self.second_moment.clear()
        self.max_second_moment.clear()

    def copy_values(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def load_values(self, values: dict[str, np.ndarray]) -> None:
        if set(values) != set(self.params):
            raise ValueError(
                f"parameter name mismatch: store has {sorted(self.params)}, "
                f"got {sorted(values)}"
            )
        for name, value in values.items():
            arr = np.asarray(value, dtype=np.float64)
            if arr.shape != self.params[name].shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: store {self.params[name].shape}, "
                    f"got {arr.shape}"
                )
            self.params[name] = arr.copy()


def amsgrad_step(
    store: ParameterStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One AMSGRAD update in place.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  vhat <- max(vhat, v);
    p <- p - lr * (m / (1-b1^t)) / (sqrt(vhat) / sqrt(1-b2^t) + eps).
    The vhat maximum makes the effective step size non-increasing under
    constant-curvature gradients, the defining AMSGRAD property.
    """
    for name, grad in grads.items():
        if name not in store.params:
            raise KeyError(f"gradient for unknown parameter {name!r}")
        if grad.shape != store.params[name].shape:
            raise ValueError(
                f"gradient shape mismatch for {name!r}: "
                f"{grad.shape} vs {store.params[name].shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NonFiniteGradientError(f"non-finite gradient for {name!r}")
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for name, grad in grads.items():
        m = store.first_moment.get(name)
        if m is None:
            m = np.zeros_like(store.params[name])
            store.first_moment[name] = m
            store.second_moment[name] = np.zeros_like(m)
            store.max_second_moment[name] = np.zeros_like(m)
        v = store.second_moment[name]
        vhat = store.max_second_moment[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        np.maximum(vhat, v, out=vhat)
        denom = np.sqrt(vhat) / np.sqrt(bc2) + eps
        store.params[name] = store.params[name] - lr * (m / bc1) / denom
