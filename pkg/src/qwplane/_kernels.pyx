# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Must stay arithmetically identical to ``_kernels_py``."""
import numpy as np
from libc.math cimport cos, sin


def step_float(const double[:, :, ::1] a, const double[:, ::1] coin, int r):
    """
    One coin-then-shift step on a float64 view of the amplitude block.

    ``a`` has shape ``(4, nx, 2*ny)`` (interleaved re/im); the result has shape
    ``(4, nx + r + 1, 2*(ny + r + 1))``.
    """
    cdef Py_ssize_t nx = a.shape[1], m2 = a.shape[2]
    cdef Py_ssize_t nxn = nx + r + 1, m2n = m2 + 2 * (r + 1)
    out_arr = np.zeros((4, nxn, m2n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t oi[4]
    cdef Py_ssize_t oj[4]
    oi[0] = 1 + r; oi[1] = 0; oi[2] = 1; oi[3] = 1
    oj[0] = 2; oj[1] = 2; oj[2] = 2 * (1 + r); oj[3] = 0
    cdef Py_ssize_t c, ii, i, m, off
    cdef double c0, c1, c2, c3
    for c in range(4):
        c0 = coin[c, 0]; c1 = coin[c, 1]; c2 = coin[c, 2]; c3 = coin[c, 3]
        off = oj[c]
        for ii in range(nxn):
            i = ii - oi[c]
            if i < 0 or i >= nx:
                continue
            for m in range(m2):
                out[c, ii, m + off] = (c0 * a[0, i, m] + c1 * a[1, i, m]
                                       + c2 * a[2, i, m] + c3 * a[3, i, m])
    return out_arr


def origin_series(const double[:, ::1] theta, const double[:, :, ::1] w,
                  const long long[::1] times):
    """
    Accumulate ``sum_n sum_j exp(i theta[n, j] t) w[n, j, :]`` for each ``t``.

    ``w`` is a float64 view of shape ``(n, 4, 8)`` (4 complex components).
    Returns an array of shape ``(len(times), 8)``.
    """
    cdef Py_ssize_t n = theta.shape[0], nt = times.shape[0]
    total_arr = np.zeros((nt, 8), dtype=np.float64)
    cdef double[:, ::1] total = total_arr
    local_arr = np.zeros((nt, 8), dtype=np.float64)
    cdef double[:, ::1] local = local_arr
    cdef Py_ssize_t block = 1024
    cdef Py_ssize_t start, k, j, ti, c
    cdef long long prev, d, dcache
    cdef double zr, zi, sr, si, tr, th, wr, wi
    for start in range(0, n, block):
        local[:, :] = 0.0
        for k in range(start, min(start + block, n)):
            for j in range(4):
                th = theta[k, j]
                prev = times[0]
                zr = cos(th * prev); zi = sin(th * prev)
                dcache = -1
                sr = 1.0; si = 0.0
                for ti in range(nt):
                    if ti > 0:
                        d = times[ti] - prev
                        if d != dcache:
                            sr = cos(th * d); si = sin(th * d)
                            dcache = d
                        tr = zr * sr - zi * si
                        zi = zr * si + zi * sr
                        zr = tr
                        prev = times[ti]
                    for c in range(4):
                        wr = w[k, j, 2 * c]; wi = w[k, j, 2 * c + 1]
                        local[ti, 2 * c] += zr * wr - zi * wi
                        local[ti, 2 * c + 1] += zr * wi + zi * wr
        for ti in range(nt):
            for c in range(8):
                total[ti, c] += local[ti, c]
    return total_arr
