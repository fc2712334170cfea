"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Times one-class SMO on a 500-point RBF Gram matrix and twenty Pegasos epochs
on a 2,000 x 5,000 sparse tf-idf-like matrix, and checks both backends agree.
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from newsgate import _kernels
from newsgate.oneclass import _initial_alpha, gram_matrix


def smo_case(n=500, nu=0.1, gamma=0.5):
    X = np.random.default_rng(0).normal(size=(n, 2))
    K = np.ascontiguousarray(gram_matrix(sp.csr_matrix(X), gamma))
    upper = 1.0 / (nu * n)

    def run(impl):
        alpha = _initial_alpha(n, upper)
        iters, _ = impl.smo_one_class(K, upper, 1e-8, 1000 * n, alpha)
        return alpha, iters
    return run


def pegasos_case(n=2000, d=5000, epochs=20, lam=1e-2):
    rng = np.random.default_rng(1)
    M = sp.random(n, d, density=0.01, format="csr", random_state=rng)
    M.sort_indices()
    y = np.where(np.asarray(M[:, : d // 2].sum(axis=1)).ravel() > np.asarray(M[:, d // 2:].sum(axis=1)).ravel(),
                 1.0, -1.0)
    indptr, indices = M.indptr.astype(np.int64), M.indices.astype(np.int64)
    orders = [np.random.default_rng(e).permutation(n).astype(np.int64) for e in range(epochs)]

    def run(impl):
        v = np.zeros(d)
        scale, bias, t = 1.0, 0.0, 0
        for order in orders:
            scale, bias, t = impl.pegasos_epoch(indptr, indices, M.data, y, order, v, scale, bias, lam, t)
        return scale * v, bias
    return run


def best_time(fn, impl, repeat):
    times, out = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(impl)
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _kernels._core is None:
        print("compiled backend unavailable; only the numpy fallback can be timed")
    impls = [("python", _kernels._fallback)] + ([("cython", _kernels._core)] if _kernels._core else [])
    for name, case in (("smo l=500", smo_case()), ("pegasos 20 epochs", pegasos_case())):
        results = {}
        for label, impl in impls:
            seconds, out = best_time(case, impl, args.repeat)
            results[label] = (seconds, out)
            print(f"{name:<20} {label:<7} {seconds * 1e3:10.1f} ms")
        if len(results) == 2:
            a, b = results["python"][1][0], results["cython"][1][0]
            speedup = results["python"][0] / results["cython"][0]
            print(f"{name:<20} speedup {speedup:8.1f}x   max |diff| {np.max(np.abs(a - b)):.1e}")


if __name__ == "__main__":
    main()
