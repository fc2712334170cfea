"""Dense reference solver for min 1/2 a'Ka s.t. 0 <= a <= C, sum(a) = 1.

Accelerated projected gradient with an exact projection onto the
capped simplex: f(tau) = sum(clip(v - tau, 0, C)) is piecewise linear and
non-increasing, so the root of f(tau) = 1 lies between two breakpoints."""
import numpy as np


def project_capped_simplex(v, upper):
    taus = np.unique(np.concatenate([v, v - upper]))
    f = np.clip(v[None, :] - taus[:, None], 0.0, upper).sum(axis=1)
    j = int(np.searchsorted(-f, -1.0))  # first breakpoint with f <= 1
    if f[j] == 1.0:
        tau = taus[j]
    else:
        t0, t1, f0, f1 = taus[j - 1], taus[j], f[j - 1], f[j]
        tau = t0 + (f0 - 1.0) * (t1 - t0) / (f0 - f1)
    return np.clip(v - tau, 0.0, upper)


def solve_qp(K, upper, iters=50000, tol=1e-14):
    n = K.shape[0]
    step = 1.0 / np.linalg.eigvalsh(K)[-1]
    a = project_capped_simplex(np.full(n, 1.0 / n), upper)
    y, t = a.copy(), 1.0
    for _ in range(iters):
        a_next = project_capped_simplex(y - step * (K @ y), upper)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = a_next + ((t - 1.0) / t_next) * (a_next - a)
        done = np.abs(a_next - a).max() < tol
        a, t = a_next, t_next
        if done:
            break
    return a, 0.5 * a @ K @ a
