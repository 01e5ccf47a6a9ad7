"""Numpy reference implementation of the recurrent-cell kernels.

The compiled extension in _kernels.pyx mirrors these functions exactly; this
module is the always-available fallback and the behavioural reference for the
backend parity tests.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def gru_forward(x, h_prev, w_xz, w_hz, b_z, w_xr, w_hr, b_r, w_xh, w_hh, b_h):
    """One gated recurrent step for a batch of row vectors.

    x: (B, In), h_prev: (B, H), w_x*: (In, H), w_h*: (H, H), biases: (1, H).
    Returns (h, z, r, hc, rh); the trailing four are caches for backward.
    """
    az = x @ w_xz + h_prev @ w_hz + b_z
    ar = x @ w_xr + h_prev @ w_hr + b_r
    with np.errstate(over="ignore"):  # saturated gates: exp overflow -> 0 or 1
        z = 1.0 / (1.0 + np.exp(-az))
        r = 1.0 / (1.0 + np.exp(-ar))
    rh = r * h_prev
    ah = x @ w_xh + rh @ w_hh + b_h
    hc = np.tanh(ah)
    h = (1.0 - z) * h_prev + z * hc
    return h, z, r, hc, rh


def gru_backward(g, x, h_prev, z, r, hc, rh, w_xz, w_hz, w_xr, w_hr, w_xh, w_hh):
    """Gradients of one step given the output gradient g (B, H).

    Returns (dx, dh_prev, dw_xz, dw_hz, db_z, dw_xr, dw_hr, db_r,
    dw_xh, dw_hh, db_h).
    """
    dz = g * (hc - h_prev)
    dhc = g * z
    dh = g * (1.0 - z)
    dah = dhc * (1.0 - hc * hc)
    drh = dah @ w_hh.T
    dr = drh * h_prev
    dh = dh + drh * r
    daz = dz * z * (1.0 - z)
    dar = dr * r * (1.0 - r)

    dw_xh = x.T @ dah
    dw_hh = rh.T @ dah
    db_h = dah.sum(axis=0, keepdims=True)
    dw_xz = x.T @ daz
    dw_hz = h_prev.T @ daz
    db_z = daz.sum(axis=0, keepdims=True)
    dw_xr = x.T @ dar
    dw_hr = h_prev.T @ dar
    db_r = dar.sum(axis=0, keepdims=True)

    dx = dah @ w_xh.T + daz @ w_xz.T + dar @ w_xr.T
    dh = dh + daz @ w_hz.T + dar @ w_hr.T
    return dx, dh, dw_xz, dw_hz, db_z, dw_xr, dw_hr, db_r, dw_xh, dw_hh, db_h
