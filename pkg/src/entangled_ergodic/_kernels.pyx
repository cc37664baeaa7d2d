# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for repeated operator-vector application.

Vectors cross the interface as complex128 arrays viewed as interleaved
float64 (re, im) pairs.  Internally each vector is split into real and
imaginary planes and ``T x`` is accumulated column by column
(``y += T[:, j] * x_j``) from the transposed operator, so the innermost loop
is a contiguous axpy the compiler can vectorize without reassociating sums.
A real operator takes a cheaper path with two multiplies per entry.
"""

import numpy as np
from libc.string cimport memcpy, memset
from libc.stdlib cimport malloc, free


cdef inline void _apply(const double* ur, const double* ui, bint real,
                        double* xr, double* xi, double* yr, double* yi,
                        Py_ssize_t d) noexcept nogil:
    # ur/ui hold T transposed: ur[j*d + i] = Re T[i, j]
    cdef Py_ssize_t i, j
    cdef double a, b
    cdef const double* cr
    cdef const double* ci
    memset(yr, 0, d * sizeof(double))
    memset(yi, 0, d * sizeof(double))
    for j in range(d):
        a = xr[j]
        b = xi[j]
        cr = ur + j * d
        if real:
            for i in range(d):
                yr[i] += cr[i] * a
                yi[i] += cr[i] * b
        else:
            ci = ui + j * d
            for i in range(d):
                yr[i] += cr[i] * a - ci[i] * b
                yi[i] += cr[i] * b + ci[i] * a
    memcpy(xr, yr, d * sizeof(double))
    memcpy(xi, yi, d * sizeof(double))


cdef inline void _split(const double* src, double* re, double* im, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(d):
        re[i] = src[2 * i]
        im[i] = src[2 * i + 1]


cdef inline void _join(const double* re, const double* im, double* dst, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(d):
        dst[2 * i] = re[i]
        dst[2 * i + 1] = im[i]


def orbit_sorted(const double[:, ::1] t_re, const double[:, ::1] t_im, bint real,
                 const double[:, ::1] g, const long long[::1] steps):
    """out[a, t] = T^(steps[0] + ... + steps[t]) g[a]; ``g`` is (M, 2d) interleaved."""
    cdef Py_ssize_t M = g.shape[0]
    cdef Py_ssize_t d = t_re.shape[0]
    cdef Py_ssize_t N = steps.shape[0]
    cdef Py_ssize_t a, t
    cdef long long s
    cdef const double[:, ::1] ur = np.ascontiguousarray(np.asarray(t_re).T)
    cdef const double[:, ::1] ui = np.ascontiguousarray(np.asarray(t_im).T)
    out = np.empty((M, N, 2 * d), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef double* buf = <double*> malloc(4 * d * sizeof(double) + 1)
    if buf == NULL:
        raise MemoryError()
    cdef double* xr = buf
    cdef double* xi = buf + d
    cdef double* yr = buf + 2 * d
    cdef double* yi = buf + 3 * d
    try:
        with nogil:
            for a in range(M):
                _split(&g[a, 0], xr, xi, d)
                for t in range(N):
                    for s in range(steps[t]):
                        _apply(&ur[0, 0], &ui[0, 0], real, xr, xi, yr, yi, d)
                    _join(xr, xi, &o[a, t, 0], d)
    finally:
        free(buf)
    return out


def powers_inplace(const double[:, ::1] t_re, const double[:, ::1] t_im, bint real,
                   double[:, :, ::1] x, const long long[::1] exps):
    """x[t, a] <- T^exps[t] x[t, a] in place; ``x`` is (N, M, 2d) interleaved."""
    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t M = x.shape[1]
    cdef Py_ssize_t d = t_re.shape[0]
    cdef Py_ssize_t a, t
    cdef long long s
    cdef const double[:, ::1] ur = np.ascontiguousarray(np.asarray(t_re).T)
    cdef const double[:, ::1] ui = np.ascontiguousarray(np.asarray(t_im).T)
    cdef double* buf = <double*> malloc(4 * d * sizeof(double) + 1)
    if buf == NULL:
        raise MemoryError()
    cdef double* xr = buf
    cdef double* xi = buf + d
    cdef double* yr = buf + 2 * d
    cdef double* yi = buf + 3 * d
    try:
        with nogil:
            for t in range(N):
                if exps[t] == 0:
                    continue
                for a in range(M):
                    _split(&x[t, a, 0], xr, xi, d)
                    for s in range(exps[t]):
                        _apply(&ur[0, 0], &ui[0, 0], real, xr, xi, yr, yi, d)
                    _join(xr, xi, &x[t, a, 0], d)
    finally:
        free(buf)
