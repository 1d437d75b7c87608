# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled classical RK4 stepping for y' = f(t) * w - A(t) y."""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()


cdef inline void _rhs(const double complex[:, :] A, const double complex[:] f,
                      const double complex[:] w, double complex[:, :] y,
                      double complex[:, :] out, Py_ssize_t m, Py_ssize_t q) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    for i in range(m):
        for j in range(q):
            acc = f[i] * w[j]
            for k in range(m):
                acc = acc - A[i, k] * y[k, j]
            out[i, j] = acc


def rk4_linear(const double[:] t, const double complex[:, :, :] A,
               const double complex[:, :] f, const double complex[:, :] y0,
               const double complex[:] w):
    """Integrate over the fine samples; steps use samples (2s, 2s+1, 2s+2).

    Returns ``(out, bad)`` where ``out[s]`` is the state after ``s`` steps
    and ``bad`` is the first step producing a non-finite value, or -1.
    """
    cdef Py_ssize_t K = A.shape[0]
    cdef Py_ssize_t m = y0.shape[0]
    cdef Py_ssize_t q = y0.shape[1]
    cdef Py_ssize_t S = (K - 1) // 2
    cdef Py_ssize_t s, i, j, a0, a1, a2
    cdef double h
    cdef Py_ssize_t bad = -1
    out_arr = np.empty((S + 1, m, q), dtype=np.complex128)
    cdef double complex[:, :, :] out = out_arr
    cdef double complex[:, :] y = np.array(y0, dtype=np.complex128)
    cdef double complex[:, :] tmp = np.empty((m, q), dtype=np.complex128)
    cdef double complex[:, :] k1 = np.empty((m, q), dtype=np.complex128)
    cdef double complex[:, :] k2 = np.empty((m, q), dtype=np.complex128)
    cdef double complex[:, :] k3 = np.empty((m, q), dtype=np.complex128)
    cdef double complex[:, :] k4 = np.empty((m, q), dtype=np.complex128)
    out[0, :, :] = y
    with nogil:
        for s in range(S):
            a0 = 2 * s
            a1 = a0 + 1
            a2 = a0 + 2
            h = t[a2] - t[a0]
            _rhs(A[a0], f[a0], w, y, k1, m, q)
            for i in range(m):
                for j in range(q):
                    tmp[i, j] = y[i, j] + 0.5 * h * k1[i, j]
            _rhs(A[a1], f[a1], w, tmp, k2, m, q)
            for i in range(m):
                for j in range(q):
                    tmp[i, j] = y[i, j] + 0.5 * h * k2[i, j]
            _rhs(A[a1], f[a1], w, tmp, k3, m, q)
            for i in range(m):
                for j in range(q):
                    tmp[i, j] = y[i, j] + h * k3[i, j]
            _rhs(A[a2], f[a2], w, tmp, k4, m, q)
            for i in range(m):
                for j in range(q):
                    y[i, j] = y[i, j] + (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
                    out[s + 1, i, j] = y[i, j]
                    if bad < 0 and not (isfinite(y[i, j].real) and isfinite(y[i, j].imag)):
                        bad = s
            if bad >= 0:
                break
    return out_arr, bad
