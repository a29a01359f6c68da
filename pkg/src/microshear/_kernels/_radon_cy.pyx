# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled projection kernels; mirrors _radon_py exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor


def forward_project(cnp.ndarray[cnp.float64_t, ndim=2] img_arr,
                    cnp.ndarray[cnp.float64_t, ndim=1] cos_arr,
                    cnp.ndarray[cnp.float64_t, ndim=1] sin_arr,
                    cnp.ndarray[cnp.float64_t, ndim=1] off_arr,
                    cnp.ndarray[cnp.float64_t, ndim=1] s_arr,
                    double step):
    cdef double[:, ::1] img = np.ascontiguousarray(img_arr)
    cdef double[::1] cos_t = np.ascontiguousarray(cos_arr)
    cdef double[::1] sin_t = np.ascontiguousarray(sin_arr)
    cdef double[::1] offsets = np.ascontiguousarray(off_arr)
    cdef double[::1] s_samples = np.ascontiguousarray(s_arr)
    cdef Py_ssize_t A = cos_t.shape[0], P = offsets.shape[0], T = s_samples.shape[0]
    cdef Py_ssize_t M = img.shape[0]
    out_arr = np.zeros((A, P))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, l, t, r0, c0
    cdef double c, s, p, px, py, col, row, fr, fc, acc, v
    cdef double half = M / 2.0

    with nogil:
        for i in range(A):
            c = cos_t[i]
            s = sin_t[i]
            for l in range(P):
                p = offsets[l]
                acc = 0.0
                for t in range(T):
                    px = p * c - s_samples[t] * s
                    py = p * s + s_samples[t] * c
                    col = (px + 1.0) * half - 0.5
                    row = (1.0 - py) * half - 0.5
                    r0 = <Py_ssize_t>floor(row)
                    c0 = <Py_ssize_t>floor(col)
                    fr = row - floor(row)
                    fc = col - floor(col)
                    v = 0.0
                    if 0 <= r0 < M and 0 <= c0 < M:
                        v += (1.0 - fr) * (1.0 - fc) * img[r0, c0]
                    if 0 <= r0 + 1 < M and 0 <= c0 < M:
                        v += fr * (1.0 - fc) * img[r0 + 1, c0]
                    if 0 <= r0 < M and 0 <= c0 + 1 < M:
                        v += (1.0 - fr) * fc * img[r0, c0 + 1]
                    if 0 <= r0 + 1 < M and 0 <= c0 + 1 < M:
                        v += fr * fc * img[r0 + 1, c0 + 1]
                    acc += v
                out[i, l] = acc * step
    return out_arr


def back_project(cnp.ndarray[cnp.float64_t, ndim=2] values_arr,
                 cnp.ndarray[cnp.float64_t, ndim=1] cos_arr,
                 cnp.ndarray[cnp.float64_t, ndim=1] sin_arr,
                 double p0, double dp, Py_ssize_t grid_size):
    cdef double[:, ::1] values = np.ascontiguousarray(values_arr)
    cdef double[::1] cos_t = np.ascontiguousarray(cos_arr)
    cdef double[::1] sin_t = np.ascontiguousarray(sin_arr)
    cdef Py_ssize_t A = cos_t.shape[0], P = values.shape[1], M = grid_size
    out_arr = np.zeros((M, M))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, r, col, k0
    cdef double x, y, p, u, f, acc

    with nogil:
        for r in range(M):
            y = 1.0 - (2.0 * r + 1.0) / M
            for col in range(M):
                x = -1.0 + (2.0 * col + 1.0) / M
                acc = 0.0
                for i in range(A):
                    p = x * cos_t[i] + y * sin_t[i]
                    u = (p - p0) / dp
                    k0 = <Py_ssize_t>floor(u)
                    f = u - floor(u)
                    if 0 <= k0 <= P - 1:
                        acc += values[i, k0] * (1.0 - f)
                    if 0 <= k0 + 1 <= P - 1:
                        acc += values[i, k0 + 1] * f
                out[r, col] = acc
    return out_arr
