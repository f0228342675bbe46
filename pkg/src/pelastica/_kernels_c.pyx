# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of pelastica._kernels_py.

Every function keeps the floating-point expression order of the numpy
reference exactly (and the build forbids FMA contraction), so the two
backends agree bitwise on identical inputs.
"""

import numpy as np

from libc.math cimport floor, sqrt


def d1(const double[:, ::1] g):
    cdef Py_ssize_t n = g.shape[0]
    cdef double half_n = 0.5 * n
    out_arr = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[j, 0] = (g[jp, 0] - g[jm, 0]) * half_n
        out[j, 1] = (g[jp, 1] - g[jm, 1]) * half_n
    return out_arr


def d2(const double[:, ::1] g):
    cdef Py_ssize_t n = g.shape[0]
    cdef double n2 = <double>(n * n)
    out_arr = np.empty((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[j, 0] = ((g[jp, 0] - 2.0 * g[j, 0]) + g[jm, 0]) * n2
        out[j, 1] = ((g[jp, 1] - 2.0 * g[j, 1]) + g[jm, 1]) * n2
    return out_arr


def d1s(const double[::1] f):
    cdef Py_ssize_t n = f.shape[0]
    cdef double half_n = 0.5 * n
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[j] = (f[jp] - f[jm]) * half_n
    return out_arr


def d2s(const double[::1] f):
    cdef Py_ssize_t n = f.shape[0]
    cdef double n2 = <double>(n * n)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        out[j] = ((f[jp] - 2.0 * f[j]) + f[jm]) * n2
    return out_arr


def rowdot(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j
    for j in range(n):
        out[j] = a[j, 0] * b[j, 0] + a[j, 1] * b[j, 1]
    return out_arr


def speeds(const double[:, ::1] g):
    cdef Py_ssize_t n = g.shape[0]
    cdef double half_n = 0.5 * n
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    cdef double tx, ty
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        tx = (g[jp, 0] - g[jm, 0]) * half_n
        ty = (g[jp, 1] - g[jm, 1]) * half_n
        out[j] = sqrt(tx * tx + ty * ty)
    return out_arr


def curvature(const double[:, ::1] g):
    cdef Py_ssize_t n = g.shape[0]
    cdef double half_n = 0.5 * n
    cdef double n2 = <double>(n * n)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, jp, jm
    cdef double tx, ty, qx, qy, s, num
    for j in range(n):
        jp = j + 1 if j + 1 < n else 0
        jm = j - 1 if j > 0 else n - 1
        tx = (g[jp, 0] - g[jm, 0]) * half_n
        ty = (g[jp, 1] - g[jm, 1]) * half_n
        qx = ((g[jp, 0] - 2.0 * g[j, 0]) + g[jm, 0]) * n2
        qy = ((g[jp, 1] - 2.0 * g[j, 1]) + g[jm, 1]) * n2
        s = sqrt(tx * tx + ty * ty)
        num = tx * qy - ty * qx
        out[j] = num / ((s * s) * s)
    return out_arr


def catmull_rom(const double[:, ::1] g, const double[::1] pos):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t m = pos.shape[0]
    out_arr = np.empty((m, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, i0, i1, i2, i3
    cdef double u, base, th, th2, th3, w0, w1, w2, w3
    for k in range(m):
        u = pos[k] * n
        base = floor(u)
        th = u - base
        i1 = (<Py_ssize_t>base) % n
        if i1 < 0:
            i1 += n
        i0 = i1 - 1 if i1 > 0 else n - 1
        i2 = i1 + 1 if i1 + 1 < n else 0
        i3 = i2 + 1 if i2 + 1 < n else 0
        th2 = th * th
        th3 = th2 * th
        w0 = 0.5 * (-th3 + 2.0 * th2 - th)
        w1 = 0.5 * (3.0 * th3 - 5.0 * th2 + 2.0)
        w2 = 0.5 * (-3.0 * th3 + 4.0 * th2 + th)
        w3 = 0.5 * (th3 - th2)
        out[k, 0] = ((w0 * g[i0, 0] + w1 * g[i1, 0]) + w2 * g[i2, 0]) + w3 * g[i3, 0]
        out[k, 1] = ((w0 * g[i0, 1] + w1 * g[i1, 1]) + w2 * g[i2, 1]) + w3 * g[i3, 1]
    return out_arr


def invert_monotone(const double[::1] psi, const double[::1] targets):
    cdef Py_ssize_t n = psi.shape[0] - 1
    cdef Py_ssize_t m = targets.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, lo, hi, mid, j
    cdef double t
    for k in range(m):
        t = targets[k]
        # upper bound: first index with psi[index] > t (matches
        # np.searchsorted(..., side="right"))
        lo = 0
        hi = n + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if psi[mid] <= t:
                lo = mid + 1
            else:
                hi = mid
        j = lo - 1
        if j < 0:
            j = 0
        elif j > n - 1:
            j = n - 1
        out[k] = ((<double>j) + (t - psi[j]) / (psi[j + 1] - psi[j])) / (<double>n)
    return out_arr
