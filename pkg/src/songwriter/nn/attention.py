"""Additive alignment attention.

Scores e_k = v_a^T tanh(W_a q + U_a k_t) over a set of key vectors, softmax
weights, and the weighted sum of the keys as the context vector.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .init import xavier_uniform
from .tensor import NumericError, Parameter, Tensor


class AdditiveAttention:
    def __init__(self, name: str, query_size: int, key_size: int, attn_size: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.name = name
        self.query_size = query_size
        self.key_size = key_size
        self.attn_size = attn_size
        self.w_a = Parameter(f"{name}.W_a", xavier_uniform(rng, query_size, attn_size, dtype))
        self.u_a = Parameter(f"{name}.U_a", xavier_uniform(rng, key_size, attn_size, dtype))
        self.v_a = Parameter(f"{name}.v_a", xavier_uniform(rng, attn_size, 1, dtype))

    def params(self) -> list[Parameter]:
        return [self.w_a, self.u_a, self.v_a]

    def project_keys(self, keys: Tensor) -> Tensor:
        """Precompute U_a k_t for all keys (reused across decode steps)."""
        return ops.matmul(keys, self.u_a)

    def context(self, query: Tensor, keys: Tensor,
                projected_keys: Tensor | None = None) -> tuple[Tensor, Tensor]:
        """Return (context vector (1, key_size), weights alpha (1, K))."""
        if keys.data.shape[0] == 0:
            raise ValueError("attention requires at least one key")
        if projected_keys is None:
            projected_keys = self.project_keys(keys)
        q = ops.matmul(query, self.w_a)
        scores = ops.matmul(ops.tanh(ops.add_bias(projected_keys, q)), self.v_a)
        alpha = ops.softmax_rows(ops.transpose(scores))
        deviation = abs(float(alpha.data.sum()) - 1.0)
        if deviation > 1e-6:
            raise NumericError(
                f"{self.name}: attention weights sum to 1{deviation:+.2e}")
        context = ops.matmul(alpha, keys)
        return context, alpha
