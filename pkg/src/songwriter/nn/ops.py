"""Differentiable primitive operations over 2-D Tensors."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, guard


def add(a: Tensor, b: Tensor) -> Tensor:
    out = guard(a.data + b.data, "add")
    return Tensor(out, (a, b), lambda g: (g, g))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """x (N, D) plus a broadcast 1-row bias (1, D)."""
    out = guard(x.data + b.data, "add_bias")
    return Tensor(out, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))


def scale(x: Tensor, s: float) -> Tensor:
    return Tensor(x.data * s, (x,), lambda g: (g * s,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = guard(a.data @ b.data, "matmul")
    return Tensor(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x (N, K) @ w (K, M) + b (1, M)."""
    out = guard(x.data @ w.data + b.data, "affine")
    return Tensor(
        out,
        (x, w, b),
        lambda g: (g @ w.data.T, x.data.T @ g, g.sum(axis=0, keepdims=True)),
    )


def concat_cols(parts: list[Tensor]) -> Tensor:
    if len(parts) == 1:
        return parts[0]
    out = np.concatenate([p.data for p in parts], axis=1)
    bounds = [0]
    for p in parts:
        bounds.append(bounds[-1] + p.data.shape[1])

    def bwd(g):
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(parts)))

    return Tensor(out, tuple(parts), bwd)


def stack_rows(rows: list[Tensor]) -> Tensor:
    """Stack K (1, D) tensors into a (K, D) tensor."""
    out = np.concatenate([r.data for r in rows], axis=0)

    def bwd(g):
        return tuple(g[i : i + 1] for i in range(len(rows)))

    return Tensor(out, tuple(rows), bwd)


def transpose(x: Tensor) -> Tensor:
    return Tensor(x.data.T, (x,), lambda g: (g.T,))


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    out = x.data[:, start:stop]

    def bwd(g):
        dx = np.zeros_like(x.data)
        dx[:, start:stop] = g
        return (dx,)

    return Tensor(out, (x,), bwd)


def sigmoid(x: Tensor) -> Tensor:
    out = guard(1.0 / (1.0 + np.exp(-x.data)), "sigmoid")
    return Tensor(out, (x,), lambda g: (g * out * (1.0 - out),))


def tanh(x: Tensor) -> Tensor:
    out = guard(np.tanh(x.data), "tanh")
    return Tensor(out, (x,), lambda g: (g * (1.0 - out * out),))


def mul(a: Tensor, b: Tensor) -> Tensor:
    out = guard(a.data * b.data, "mul")
    return Tensor(out, (a, b), lambda g: (g * b.data, g * a.data))


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise stable softmax."""
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = guard(e / e.sum(axis=1, keepdims=True), "softmax")

    def bwd(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return (out * (g - dot),)

    return Tensor(out, (x,), bwd)


def sum_all(x: Tensor) -> Tensor:
    out = np.array([[x.data.sum()]], dtype=x.data.dtype)
    return Tensor(out, (x,), lambda g: (np.full_like(x.data, g[0, 0]),))


def gather_rows(table: Tensor, indices) -> Tensor:
    """Select rows from a (V, D) table; gradients scatter-add back."""
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    out = table.data[idx]

    def bwd(g):
        dt = np.zeros_like(table.data)
        np.add.at(dt, idx, g)
        return (dt,)

    return Tensor(out, (table,), bwd)


def softmax_cross_entropy(logits: Tensor, target: int) -> tuple[Tensor, np.ndarray]:
    """Stable softmax + negative log likelihood of the target class.

    Returns the scalar loss tensor and the probability row as a plain array.
    """
    row = logits.data
    if not 0 <= target < row.shape[1]:
        raise IndexError(f"target {target} out of range for {row.shape[1]} classes")
    shifted = row - row.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    z = e.sum(axis=1, keepdims=True)
    probs = e / z
    log_p = shifted[0, target] - np.log(z[0, 0])
    loss = np.array([[-log_p]], dtype=row.dtype)
    guard(loss, "softmax_cross_entropy")

    def bwd(g):
        d = probs.copy()
        d[0, target] -= 1.0
        return (g[0, 0] * d,)

    return Tensor(loss, (logits,), bwd), probs[0]


def stable_softmax(row: np.ndarray) -> np.ndarray:
    """Plain-array softmax for sampling paths that are never differentiated."""
    shifted = row - row.max()
    e = np.exp(shifted)
    return e / e.sum()
