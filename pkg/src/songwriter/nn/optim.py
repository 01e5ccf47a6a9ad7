"""Adam with per-step exponential learning-rate decay, plus gradient clipping."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Parameter


class AdamState:
    """Adam moments for a fixed parameter list.

    The effective learning rate at step t is base_lr * decay**t; moments use
    the standard bias correction. Gradients are cleared after each update.
    """

    def __init__(self, params: list[Parameter], lr: float = 0.001,
                 decay: float = 0.9999, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.decay = decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def current_lr(self) -> float:
        return self.lr * self.decay ** self.t

    def step(self) -> None:
        self.t += 1
        lr_t = self.current_lr()
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            update = (m / c1) / (np.sqrt(v / c2) + self.eps)
            p.data -= lr_t * update
            p.grad[...] = 0.0


def global_grad_norm(params: list[Parameter]) -> float:
    total = 0.0
    for p in params:
        total += float((p.grad.astype(np.float64) ** 2).sum())
    return math.sqrt(total)


def clip_gradients(params: list[Parameter], max_norm: float) -> float:
    """Scale all gradients down to a global norm of max_norm; returns the norm."""
    norm = global_grad_norm(params)
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for p in params:
            p.grad *= factor
    return norm
