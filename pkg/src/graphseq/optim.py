"""Parameter registry, Adam updates, and global-norm gradient clipping."""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor

__all__ = ["ParamSet", "StateError", "adam_step", "clip_global_norm", "glorot_uniform"]


class StateError(RuntimeError):
    """Raised when an optimizer step finds the parameter state inconsistent."""


class ParamSet:
    """Ordered, name-keyed set of learnable tensors plus Adam moment state.

    Names are unique and iteration follows insertion order, which makes
    checkpoints and update sweeps deterministic.
    """

    def __init__(self):
        self._entries: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, data) -> Tensor:
        if name in self._entries:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(data, requires_grad=True)
        self._entries[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def tensors(self) -> list[Tensor]:
        return list(self._entries.values())

    def zero_grads(self) -> None:
        for t in self._entries.values():
            t.grad = None

    def copy_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._entries.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        missing = set(self._entries) - set(arrays)
        extra = set(arrays) - set(self._entries)
        if missing or extra:
            raise ValueError(f"parameter name mismatch: missing={sorted(missing)}, extra={sorted(extra)}")
        for name, t in self._entries.items():
            arr = np.asarray(arrays[name], dtype=np.float64)
            if arr.shape != t.data.shape:
                raise ValueError(f"parameter {name!r}: shape {arr.shape} != expected {t.data.shape}")
            t.data = arr.copy()

    def reset_optimizer(self) -> None:
        for name, t in self._entries.items():
            self._m[name] = np.zeros_like(t.data)
            self._v[name] = np.zeros_like(t.data)
        self.step_count = 0


def adam_step(params: ParamSet, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update over every parameter; grads are cleared."""
    for name, t in params.items():
        if t.grad is None:
            raise StateError(f"parameter {name!r} has no gradient; run backward first")
    params.step_count += 1
    t_step = params.step_count
    bc1 = 1.0 - beta1 ** t_step
    bc2 = 1.0 - beta2 ** t_step
    for name, p in params.items():
        g = p.grad
        m = params._m[name]
        v = params._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    params.zero_grads()


def clip_global_norm(params: ParamSet, max_norm: float = 20.0) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``.

    Returns the pre-clip norm. Parameters without a gradient contribute zero.
    """
    total = 0.0
    for t in params.tensors():
        if t.grad is not None:
            total += float((t.grad * t.grad).sum())
    norm = math.sqrt(total)
    if norm > max_norm:
        factor = max_norm / norm
        for t in params.tensors():
            if t.grad is not None:
                t.grad *= factor
    return norm


def glorot_uniform(rng, fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, (fan_in, fan_out))
