# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the one-class SMO solver and Pegasos."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def smo_one_class(double[:, ::1] K, double upper, double tol, long max_iter,
                  double[::1] alpha):
    cdef Py_ssize_t n = K.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double g, g_min, g_max, gap = 0.0, quad, delta, room_i, room_j
    cdef long it = 0
    cdef double[::1] grad = np.asarray(K) @ np.asarray(alpha)

    while it < max_iter:
        i = -1
        j = -1
        g_min = np.inf
        g_max = -np.inf
        for t in range(n):
            g = grad[t]
            if alpha[t] < upper and g < g_min:
                g_min = g
                i = t
            if alpha[t] > 0.0 and g > g_max:
                g_max = g
                j = t
        if i < 0 or j < 0:
            gap = 0.0
            break
        gap = g_max - g_min
        if gap <= tol:
            break
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 1e-12:
            quad = 1e-12
        delta = gap / quad
        room_i = upper - alpha[i]
        room_j = alpha[j]
        if delta >= room_i and room_i <= room_j:
            delta = room_i
            alpha[i] = upper
            if room_i == room_j:
                alpha[j] = 0.0
            else:
                alpha[j] = alpha[j] - delta
        elif delta >= room_j:
            delta = room_j
            alpha[j] = 0.0
            alpha[i] = alpha[i] + delta
        else:
            alpha[i] = alpha[i] + delta
            alpha[j] = alpha[j] - delta
        # K is symmetric: row access keeps the update cache-friendly
        for t in range(n):
            grad[t] += delta * (K[i, t] - K[j, t])
        it += 1
    return it, gap


def pegasos_epoch(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, double[::1] data,
                  double[::1] y, cnp.int64_t[::1] order, double[::1] v,
                  double scale, double bias, double lam, long t):
    cdef Py_ssize_t k, p, r, lo, hi, c
    cdef Py_ssize_t dim = v.shape[0]
    cdef double eta, dot, margin, shrink, coef
    for k in range(order.shape[0]):
        r = order[k]
        t += 1
        eta = 1.0 / (lam * t)
        lo = indptr[r]
        hi = indptr[r + 1]
        dot = 0.0
        for p in range(lo, hi):
            dot += v[indices[p]] * data[p]
        margin = y[r] * (scale * dot + bias)
        shrink = 1.0 - eta * lam
        if shrink <= 0.0:
            for c in range(dim):
                v[c] = 0.0
            scale = 1.0
        else:
            scale *= shrink
        if margin < 1.0:
            coef = eta * y[r] / scale
            for p in range(lo, hi):
                v[indices[p]] += coef * data[p]
            bias += eta * y[r]
        if scale < 1e-9:
            for c in range(dim):
                v[c] *= scale
            scale = 1.0
    return scale, bias, t
