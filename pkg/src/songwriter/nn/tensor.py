"""Reverse-mode autodiff over dense numpy arrays.

Every value in a recorded computation is a 2-D Tensor (vectors are 1-row
matrices). Ops build a DAG of Tensors; backward() walks it once in reverse
topological order and adds each Parameter's contribution into its persistent
gradient buffer, so repeated backward calls accumulate until the optimizer
clears them. Gradients of interior nodes live only for the duration of one
backward pass.
"""

from __future__ import annotations

import math

import numpy as np


class NumericError(FloatingPointError):
    """A forward op produced NaN or Inf from finite inputs."""


_guard_enabled = True


def set_guard(enabled: bool) -> bool:
    """Toggle the NaN/Inf guard on op outputs; returns the previous setting."""
    global _guard_enabled
    previous = _guard_enabled
    _guard_enabled = bool(enabled)
    return previous


def guard(data: np.ndarray, op: str) -> np.ndarray:
    # the sum of finite values is finite (overflow aside), so one reduction
    # catches any NaN or Inf without scanning twice
    if _guard_enabled and not math.isfinite(float(data.sum())):
        if np.all(np.isfinite(data)):
            return data  # the sum overflowed but every element is finite
        raise NumericError(f"non-finite values produced by {op}")
    return data


class Tensor:
    """A node in the recorded computation.

    `bwd`, when present, maps the node's output gradient to a tuple of
    gradient contributions aligned with `parents` (None for non-differentiable
    parents).
    """

    __slots__ = ("data", "grad", "parents", "bwd")

    def __init__(self, data, parents=(), bwd=None):
        self.data = np.asarray(data)
        if self.data.ndim != 2:
            self.data = np.atleast_2d(self.data)
        self.grad = None
        self.parents = parents
        self.bwd = bwd

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype})"


class Parameter(Tensor):
    """A named leaf tensor with a persistent gradient buffer."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(np.array(data, copy=True))
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def constant(data, dtype) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype))


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
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate gradients of every Parameter reachable from a scalar loss."""
    if loss.data.size != 1:
        raise ValueError(f"backward root must be scalar, got shape {loss.data.shape}")
    order = _topological_order(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += g
            continue
        if node.bwd is None:
            continue
        for parent, pg in zip(node.parents, node.bwd(g)):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg
