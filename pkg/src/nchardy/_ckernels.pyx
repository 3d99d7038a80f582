# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled jump-sum kernels; same contract as ``_kernels_py``."""

import numpy as np
from libc.math cimport atan, M_PI


def grad_sum(xs, ys, edges, coef):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(edges, dtype=np.float64)
    # coefficients transposed so the inner reduction runs over contiguous memory
    cdef const double[:, ::1] ct = np.ascontiguousarray(np.asarray(coef, dtype=np.float64).T)
    cdef Py_ssize_t npts = x.shape[0], nj = e.shape[0], m = ct.shape[0]
    out = np.zeros((npts, 2, m))
    cdef double[:, :, ::1] o = out
    cdef double[::1] pk = np.empty(nj)
    cdef double[::1] gk = np.empty(nj)
    cdef Py_ssize_t i, k, a
    cdef double u, yy, r, sp, sg
    for i in range(npts):
        yy = y[i]
        for k in range(nj):
            u = x[i] - e[k]
            r = 1.0 / (M_PI * (u * u + yy * yy))
            pk[k] = yy * r
            gk[k] = -u * r
        for a in range(m):
            sp = 0.0
            sg = 0.0
            for k in range(nj):
                sp = sp + pk[k] * ct[a, k]
                sg = sg + gk[k] * ct[a, k]
            o[i, 0, a] = sp
            o[i, 1, a] = sg
    return out


def ext_sum(xs, ys, edges, coef):
    cdef const double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef const double[::1] e = np.ascontiguousarray(edges, dtype=np.float64)
    cdef const double[:, ::1] ct = np.ascontiguousarray(np.asarray(coef, dtype=np.float64).T)
    cdef Py_ssize_t npts = x.shape[0], nj = e.shape[0], m = ct.shape[0]
    out = np.zeros((npts, m))
    cdef double[:, ::1] o = out
    cdef double[::1] wk = np.empty(nj)
    cdef Py_ssize_t i, k, a
    cdef double s, iy
    # y > 0 for every caller, so atan(u / y) equals atan2(u, y)
    for i in range(npts):
        iy = 1.0 / y[i]
        for k in range(nj):
            wk[k] = atan((x[i] - e[k]) * iy)
        for a in range(m):
            s = 0.0
            for k in range(nj):
                s = s + wk[k] * ct[a, k]
            o[i, a] = s / M_PI
    return out
