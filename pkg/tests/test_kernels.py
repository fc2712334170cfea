import numpy as np
import pytest
import scipy.sparse as sp

from newsgate import _kernels
from newsgate.oneclass import _initial_alpha, gram_matrix

needs_core = pytest.mark.skipif(_kernels._core is None, reason="compiled extension not built")


def test_backend_reported():
    assert _kernels.BACKEND in ("cython", "python")


def smo_case(seed, n=80):
    X = np.random.default_rng(seed).normal(size=(n, 3))
    K = gram_matrix(sp.csr_matrix(X), 0.5)
    upper = 1.0 / (0.2 * n)
    return K, upper, _initial_alpha(n, upper)


@needs_core
@pytest.mark.parametrize("seed", range(3))
def test_smo_parity(seed):
    K, upper, a0 = smo_case(seed)
    a1, a2 = a0.copy(), a0.copy()
    it1, gap1 = _kernels._fallback.smo_one_class(K, upper, 1e-8, 100000, a1)
    it2, gap2 = _kernels._core.smo_one_class(K, upper, 1e-8, 100000, a2)
    assert it1 == it2
    assert np.allclose(a1, a2, rtol=0, atol=1e-12)
    assert abs(gap1 - gap2) <= 1e-12


def pegasos_case(seed, n=60, d=30):
    rng = np.random.default_rng(seed)
    M = sp.random(n, d, density=0.2, random_state=seed, format="csr")
    M.sort_indices()
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    order = rng.permutation(n).astype(np.int64)
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.copy(), y, order, d


@needs_core
@pytest.mark.parametrize("seed", range(3))
def test_pegasos_parity(seed):
    indptr, indices, data, y, order, d = pegasos_case(seed)
    v1, v2 = np.zeros(d), np.zeros(d)
    s1 = (1.0, 0.0, 0)
    s2 = (1.0, 0.0, 0)
    for _ in range(3):
        s1 = _kernels._fallback.pegasos_epoch(indptr, indices, data, y, order, v1, *s1[:2], 0.01, s1[2])
        s2 = _kernels._core.pegasos_epoch(indptr, indices, data, y, order, v2, *s2[:2], 0.01, s2[2])
    assert s1[2] == s2[2]
    assert np.allclose(s1[0] * v1, s2[0] * v2, rtol=1e-12, atol=1e-12)
    assert abs(s1[1] - s2[1]) <= 1e-12


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, NEWSGATE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import newsgate._kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
