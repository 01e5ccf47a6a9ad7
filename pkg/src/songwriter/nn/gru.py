"""Gated recurrent cell and bidirectional sequence runner.

The cell's update follows the standard gating equations: update gate
z = sigma(W_hz h + W_xz x + b_z), reset gate r likewise, candidate
hc = tanh(W_h (r*h) + W_x x + b), new state h' = (1-z)*h + z*hc. One step is
a single tape node backed by the fused kernels, with a hand-derived backward.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .init import xavier_uniform, zeros_bias
from .tensor import Parameter, Tensor, constant, guard
from .ops import concat_cols


class GruCell:
    """One recurrent cell; owns its nine parameters."""

    def __init__(self, name: str, input_size: int, hidden_size: int,
                 rng: np.random.Generator, dtype=np.float32):
        self.name = name
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.dtype = np.dtype(dtype)

        def w(suffix, fan_in, fan_out):
            return Parameter(f"{name}.{suffix}", xavier_uniform(rng, fan_in, fan_out, dtype))

        self.w_xz = w("W_xz", input_size, hidden_size)
        self.w_hz = w("W_hz", hidden_size, hidden_size)
        self.b_z = Parameter(f"{name}.b_z", zeros_bias(hidden_size, dtype))
        self.w_xr = w("W_xr", input_size, hidden_size)
        self.w_hr = w("W_hr", hidden_size, hidden_size)
        self.b_r = Parameter(f"{name}.b_r", zeros_bias(hidden_size, dtype))
        self.w_xh = w("W_xh", input_size, hidden_size)
        self.w_hh = w("W_hh", hidden_size, hidden_size)
        self.b_h = Parameter(f"{name}.b_h", zeros_bias(hidden_size, dtype))

    def params(self) -> list[Parameter]:
        return [self.w_xz, self.w_hz, self.b_z, self.w_xr, self.w_hr, self.b_r,
                self.w_xh, self.w_hh, self.b_h]

    def zero_state(self) -> Tensor:
        return constant(np.zeros((1, self.hidden_size)), self.dtype)

    def step(self, h_prev: Tensor, x: Tensor) -> Tensor:
        if x.data.shape[1] != self.input_size:
            raise ValueError(
                f"{self.name}: input width {x.data.shape[1]} != {self.input_size}"
            )
        if h_prev.data.shape[1] != self.hidden_size:
            raise ValueError(
                f"{self.name}: state width {h_prev.data.shape[1]} != {self.hidden_size}"
            )
        h, z, r, hc, rh = kernels.gru_forward(
            x.data, h_prev.data,
            self.w_xz.data, self.w_hz.data, self.b_z.data,
            self.w_xr.data, self.w_hr.data, self.b_r.data,
            self.w_xh.data, self.w_hh.data, self.b_h.data,
        )
        guard(h, "gru_step")
        parents = (x, h_prev, self.w_xz, self.w_hz, self.b_z,
                   self.w_xr, self.w_hr, self.b_r, self.w_xh, self.w_hh, self.b_h)
        x_data, h_data = x.data, h_prev.data
        cell = self

        def bwd(g):
            dx, dh, dw_xz, dw_hz, db_z, dw_xr, dw_hr, db_r, dw_xh, dw_hh, db_h = (
                kernels.gru_backward(
                    g, x_data, h_data, z, r, hc, rh,
                    cell.w_xz.data, cell.w_hz.data, cell.w_xr.data, cell.w_hr.data,
                    cell.w_xh.data, cell.w_hh.data,
                )
            )
            return (dx, dh, dw_xz, dw_hz, db_z, dw_xr, dw_hr, db_r, dw_xh, dw_hh, db_h)

        return Tensor(h, parents, bwd)


def run_bidirectional(cell_fwd: GruCell, cell_bwd: GruCell,
                      inputs: list[Tensor]) -> list[Tensor]:
    """Run both directions over a sequence and concatenate per-step states.

    Output t is [forward state after consuming inputs 1..t ; backward state
    after consuming inputs |seq|..t]. Both directions start from zero states.
    """
    if not inputs:
        raise ValueError("run_bidirectional requires a non-empty sequence")
    h = cell_fwd.zero_state()
    forward = []
    for x in inputs:
        h = cell_fwd.step(h, x)
        forward.append(h)
    h = cell_bwd.zero_state()
    backward_rev = []
    for x in reversed(inputs):
        h = cell_bwd.step(h, x)
        backward_rev.append(h)
    backward = list(reversed(backward_rev))
    return [concat_cols([f, b]) for f, b in zip(forward, backward)]
