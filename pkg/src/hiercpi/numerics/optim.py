from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update over named arrays.

    Names missing from ``grads`` are treated as having zero gradient. Returns
    new arrays; the inputs are not modified.
    """
    t = state.step + 1
    out, m_new, v_new = {}, {}, {}
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, w in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(w)
        if g.shape != w.shape:
            raise ValueError(f"adam_step: grad shape {g.shape} != param shape {w.shape} for {name}")
        m = beta1 * state.m.get(name, np.zeros_like(w)) + (1.0 - beta1) * g
        v = beta2 * state.v.get(name, np.zeros_like(w)) + (1.0 - beta2) * g * g
        out[name] = w - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        m_new[name], v_new[name] = m, v
    return out, AdamState(step=t, m=m_new, v=v_new)


def global_norm(arrays) -> float:
    return float(np.sqrt(sum(float((a * a).sum()) for a in arrays)))


class Adam:
    """In-place Adam over a dict of parameter tensors."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 max_grad_norm: float | None = None):
        self.params = params
        self.max_grad_norm = max_grad_norm
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.state = AdamState()

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        arrays = {k: p.data for k, p in self.params.items()}
        grads = {k: p.grad for k, p in self.params.items() if p.grad is not None}
        if self.max_grad_norm is not None:
            norm = global_norm(grads.values())
            if norm > self.max_grad_norm:
                grads = {k: g * (self.max_grad_norm / norm) for k, g in grads.items()}
        new, self.state = adam_step(arrays, grads, self.state, self.lr,
                                    self.betas[0], self.betas[1], self.eps)
        for k, p in self.params.items():
            p.data = new[k].astype(p.data.dtype, copy=False)


def cosine_lr(base_lr: float, step: int, total: int, min_ratio: float = 0.0) -> float:
    """Half-cosine decay from ``base_lr`` at step 0 to ``min_ratio * base_lr`` at ``total``."""
    if total <= 0:
        return base_lr
    t = min(max(step, 0), total) / total
    return base_lr * (min_ratio + (1.0 - min_ratio) * 0.5 * (1.0 + math.cos(math.pi * t)))
