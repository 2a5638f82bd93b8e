# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the grid-rate and Monte-Carlo quadratic-form loops."""
import numpy as np

from libc.math cimport log, log1p, sqrt


cdef double _DIRECT = 1e-2      # below this, 1 + x would lose digits: use log1p
cdef double _FLUSH = 1e150      # fold the running product into the sum before overflow


def rate_grid(const double[::1] w, const double[::1] p, const double[::1] gains):
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t m = gains.shape[0]
    cdef Py_ssize_t i, k
    cdef double wi, ratio, acc, prod, x
    out = np.zeros(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            wi = w[i]
            if wi <= 0.0:
                continue
            ratio = p[i] / wi
            acc = 0.0
            prod = 1.0
            # sum_k log1p(x_k) as one log of a running product of (1 + x_k)
            for k in range(m):
                x = ratio * gains[k]
                if x < _DIRECT:
                    acc = acc + log1p(x)
                else:
                    prod = prod * (1.0 + x)
                    if prod > _FLUSH:
                        acc = acc + log(prod)
                        prod = 1.0
            if prod != 1.0:
                acc = acc + log(prod)
            o[i] = wi * acc
    return out


def downdate_forms(z, const double[::1] weights):
    cdef Py_ssize_t n_s = z.shape[0]
    cdef Py_ssize_t n_r = z.shape[1]
    cdef Py_ssize_t n_t = z.shape[2]
    zz = np.ascontiguousarray(z, dtype=np.complex128).view(np.float64).reshape(n_s, n_r, n_t, 2)
    cdef const double[:, :, :, ::1] zv = zz
    out = np.empty((n_s, n_t))
    cdef double[:, ::1] o = out
    # Hermitian A and its lower Cholesky factor, stored as separate re/im planes
    lre_arr = np.empty((n_r, n_r))
    lim_arr = np.empty((n_r, n_r))
    yre_arr = np.empty(n_r)
    yim_arr = np.empty(n_r)
    cdef double[:, ::1] lre = lre_arr
    cdef double[:, ::1] lim = lim_arr
    cdef double[::1] yre = yre_arr
    cdef double[::1] yim = yim_arr
    cdef Py_ssize_t s, r, c, k, j
    cdef double accre, accim, d, q, ar, ai, br, bi
    with nogil:
        for s in range(n_s):
            for r in range(n_r):
                for c in range(r + 1):
                    accre = 1.0 if r == c else 0.0
                    accim = 0.0
                    for k in range(n_t):
                        ar = zv[s, r, k, 0]
                        ai = zv[s, r, k, 1]
                        br = zv[s, c, k, 0]
                        bi = zv[s, c, k, 1]
                        # z_r * conj(z_c)
                        accre = accre + weights[k] * (ar * br + ai * bi)
                        accim = accim + weights[k] * (ai * br - ar * bi)
                    lre[r, c] = accre
                    lim[r, c] = accim
            # in-place Cholesky: A = L L^H
            for c in range(n_r):
                d = lre[c, c]
                for j in range(c):
                    d = d - (lre[c, j] * lre[c, j] + lim[c, j] * lim[c, j])
                d = sqrt(d)
                lre[c, c] = d
                lim[c, c] = 0.0
                for r in range(c + 1, n_r):
                    accre = lre[r, c]
                    accim = lim[r, c]
                    for j in range(c):
                        # L[r, j] * conj(L[c, j])
                        accre = accre - (lre[r, j] * lre[c, j] + lim[r, j] * lim[c, j])
                        accim = accim - (lim[r, j] * lre[c, j] - lre[r, j] * lim[c, j])
                    lre[r, c] = accre / d
                    lim[r, c] = accim / d
            for k in range(n_t):
                q = 0.0
                for r in range(n_r):
                    accre = zv[s, r, k, 0]
                    accim = zv[s, r, k, 1]
                    for j in range(r):
                        accre = accre - (lre[r, j] * yre[j] - lim[r, j] * yim[j])
                        accim = accim - (lre[r, j] * yim[j] + lim[r, j] * yre[j])
                    yre[r] = accre / lre[r, r]
                    yim[r] = accim / lre[r, r]
                    q = q + yre[r] * yre[r] + yim[r] * yim[r]
                o[s, k] = q / (1.0 - weights[k] * q)
    return out
