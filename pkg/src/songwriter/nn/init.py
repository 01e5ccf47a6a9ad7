"""Deterministic parameter initialization."""

from __future__ import annotations

import math

import numpy as np


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype)


def embedding_uniform(rng: np.random.Generator, rows: int, cols: int, dtype) -> np.ndarray:
    return rng.uniform(-0.1, 0.1, size=(rows, cols)).astype(dtype)


def zeros_bias(cols: int, dtype) -> np.ndarray:
    return np.zeros((1, cols), dtype=dtype)
