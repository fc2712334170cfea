"""Numpy versions of the compiled kernels.

Selected automatically when the Cython extension is unavailable (or when
NEWSGATE_PURE_PYTHON=1).  The update rules are identical; the only
numerical difference is summation order inside dot products.
"""
import numpy as np


def smo_one_class(K, upper, tol, max_iter, alpha):
    """Minimise 0.5 a'Ka subject to 0 <= a <= upper, sum(a) fixed.

    ``alpha`` is a feasible start and is updated in place.  Each step moves
    mass between the maximal-violating pair, so the equality constraint is
    kept exactly.  Returns (iterations, final KKT gap).
    """
    grad = K @ alpha
    gap = 0.0
    it = 0
    while it < max_iter:
        can_grow = alpha < upper
        can_shrink = alpha > 0.0
        if not can_grow.any() or not can_shrink.any():
            gap = 0.0
            break
        i = int(np.argmin(np.where(can_grow, grad, np.inf)))
        j = int(np.argmax(np.where(can_shrink, grad, -np.inf)))
        gap = grad[j] - grad[i]
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
            alpha[j] = 0.0 if room_i == room_j else alpha[j] - delta
        elif delta >= room_j:
            delta = room_j
            alpha[j] = 0.0
            alpha[i] = alpha[i] + delta
        else:
            alpha[i] = alpha[i] + delta
            alpha[j] = alpha[j] - delta
        grad += delta * (K[i] - K[j])
        it += 1
    return it, float(gap)


def pegasos_epoch(indptr, indices, data, y, order, v, scale, bias, lam, t):
    """One Pegasos pass over the rows listed in ``order``.

    Weights are held as ``scale * v`` so the per-step shrink is O(1); ``v``
    is updated in place.  Returns the new (scale, bias, t).
    """
    for r in order:
        t += 1
        eta = 1.0 / (lam * t)
        cols = indices[indptr[r]:indptr[r + 1]]
        vals = data[indptr[r]:indptr[r + 1]]
        margin = y[r] * (scale * float(v[cols] @ vals) + bias)
        shrink = 1.0 - eta * lam
        if shrink <= 0.0:
            v[:] = 0.0
            scale = 1.0
        else:
            scale *= shrink
        if margin < 1.0:
            v[cols] += (eta * y[r] / scale) * vals
            bias += eta * y[r]
        if scale < 1e-9:
            v *= scale
            scale = 1.0
    return scale, bias, t
