# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled recurrent-cell kernels.

Matrix products go through numpy (BLAS); the gate nonlinearities and state
combination, which dominate Python-level overhead in the recurrent inner
loop, are fused into single C passes. Must stay numerically equivalent to
_kernels_np.py.
"""

from libc.math cimport exp, tanh

import numpy as np

BACKEND = "compiled"

ctypedef fused real:
    float
    double


cdef void _gates(real[:, ::1] xz, real[:, ::1] hz, real[:, ::1] b_z,
                 real[:, ::1] xr, real[:, ::1] hr, real[:, ::1] b_r,
                 real[:, ::1] h_prev,
                 real[:, ::1] z, real[:, ::1] r, real[:, ::1] rh) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef real az, ar
    for i in range(xz.shape[0]):
        for j in range(xz.shape[1]):
            az = xz[i, j] + hz[i, j] + b_z[0, j]
            z[i, j] = <real>1.0 / (<real>1.0 + <real>exp(-az))
            ar = xr[i, j] + hr[i, j] + b_r[0, j]
            r[i, j] = <real>1.0 / (<real>1.0 + <real>exp(-ar))
            rh[i, j] = r[i, j] * h_prev[i, j]


cdef void _combine(real[:, ::1] xh, real[:, ::1] rhh, real[:, ::1] b_h,
                   real[:, ::1] z, real[:, ::1] h_prev,
                   real[:, ::1] hc, real[:, ::1] h) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef real ah
    for i in range(xh.shape[0]):
        for j in range(xh.shape[1]):
            ah = xh[i, j] + rhh[i, j] + b_h[0, j]
            hc[i, j] = <real>tanh(ah)
            h[i, j] = (<real>1.0 - z[i, j]) * h_prev[i, j] + z[i, j] * hc[i, j]


cdef void _back_stage1(real[:, ::1] g, real[:, ::1] z, real[:, ::1] hc,
                       real[:, ::1] h_prev,
                       real[:, ::1] dah, real[:, ::1] daz,
                       real[:, ::1] dh) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef real dzv, dhcv
    for i in range(g.shape[0]):
        for j in range(g.shape[1]):
            dzv = g[i, j] * (hc[i, j] - h_prev[i, j])
            dhcv = g[i, j] * z[i, j]
            dah[i, j] = dhcv * (<real>1.0 - hc[i, j] * hc[i, j])
            daz[i, j] = dzv * z[i, j] * (<real>1.0 - z[i, j])
            dh[i, j] = g[i, j] * (<real>1.0 - z[i, j])


cdef void _back_stage2(real[:, ::1] drh, real[:, ::1] h_prev, real[:, ::1] r,
                       real[:, ::1] dar, real[:, ::1] dh) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef real drv
    for i in range(drh.shape[0]):
        for j in range(drh.shape[1]):
            drv = drh[i, j] * h_prev[i, j]
            dar[i, j] = drv * r[i, j] * (<real>1.0 - r[i, j])
            dh[i, j] = dh[i, j] + drh[i, j] * r[i, j]


def _fused_forward(real[:, ::1] xz, real[:, ::1] hz, real[:, ::1] b_z,
                   real[:, ::1] xr, real[:, ::1] hr, real[:, ::1] b_r,
                   real[:, ::1] h_prev,
                   real[:, ::1] z, real[:, ::1] r, real[:, ::1] rh):
    _gates(xz, hz, b_z, xr, hr, b_r, h_prev, z, r, rh)


def _fused_combine(real[:, ::1] xh, real[:, ::1] rhh, real[:, ::1] b_h,
                   real[:, ::1] z, real[:, ::1] h_prev,
                   real[:, ::1] hc, real[:, ::1] h):
    _combine(xh, rhh, b_h, z, h_prev, hc, h)


def _fused_back1(real[:, ::1] g, real[:, ::1] z, real[:, ::1] hc,
                 real[:, ::1] h_prev,
                 real[:, ::1] dah, real[:, ::1] daz, real[:, ::1] dh):
    _back_stage1(g, z, hc, h_prev, dah, daz, dh)


def _fused_back2(real[:, ::1] drh, real[:, ::1] h_prev, real[:, ::1] r,
                 real[:, ::1] dar, real[:, ::1] dh):
    _back_stage2(drh, h_prev, r, dar, dh)


def gru_forward(x, h_prev, w_xz, w_hz, b_z, w_xr, w_hr, b_r, w_xh, w_hh, b_h):
    """Same contract as _kernels_np.gru_forward."""
    xz = np.dot(x, w_xz)
    hz = np.dot(h_prev, w_hz)
    xr = np.dot(x, w_xr)
    hr = np.dot(h_prev, w_hr)
    z = np.empty_like(hz)
    r = np.empty_like(hz)
    rh = np.empty_like(hz)
    _fused_forward(xz, hz, b_z, xr, hr, b_r, h_prev, z, r, rh)
    xh = np.dot(x, w_xh)
    rhh = np.dot(rh, w_hh)
    hc = np.empty_like(hz)
    h = np.empty_like(hz)
    _fused_combine(xh, rhh, b_h, z, h_prev, hc, h)
    return h, z, r, hc, rh


def gru_backward(g, x, h_prev, z, r, hc, rh, w_xz, w_hz, w_xr, w_hr, w_xh, w_hh):
    """Same contract as _kernels_np.gru_backward."""
    g = np.ascontiguousarray(g)
    dah = np.empty_like(g)
    daz = np.empty_like(g)
    dh = np.empty_like(g)
    _fused_back1(g, z, hc, h_prev, dah, daz, dh)
    drh = np.dot(dah, w_hh.T)
    dar = np.empty_like(g)
    _fused_back2(np.ascontiguousarray(drh), h_prev, r, dar, dh)

    dw_xh = np.dot(x.T, dah)
    dw_hh = np.dot(rh.T, dah)
    db_h = dah.sum(axis=0, keepdims=True)
    dw_xz = np.dot(x.T, daz)
    dw_hz = np.dot(h_prev.T, daz)
    db_z = daz.sum(axis=0, keepdims=True)
    dw_xr = np.dot(x.T, dar)
    dw_hr = np.dot(h_prev.T, dar)
    db_r = dar.sum(axis=0, keepdims=True)

    dx = np.dot(dah, w_xh.T)
    dx += np.dot(daz, w_xz.T)
    dx += np.dot(dar, w_xr.T)
    dh += np.dot(daz, w_hz.T)
    dh += np.dot(dar, w_hr.T)
    return dx, dh, dw_xz, dw_hz, db_z, dw_xr, dw_hr, db_r, dw_xh, dw_hh, db_h
