import numpy as np
import pytest

from regime_split import kernels
from conftest import lstsq_sse

BACKENDS = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])


def _data(n, p, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    return X, X @ rng.standard_normal(p) + rng.standard_normal(n)


@pytest.mark.parametrize("backend", BACKENDS)
def test_prefix_sse_matches_lstsq(backend):
    X, y = _data(40, 4, 0)
    sse, ok = kernels.prefix_sse(X, y, backend=backend)
    assert sse.shape == ok.shape == (41,)
    assert not ok[:4].any()
    for k in range(4, 41):
        assert ok[k]
        assert sse[k] == pytest.approx(lstsq_sse(X[:k], y[:k]), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_prefix_rank_deficient_blocks(backend):
    X, y = _data(20, 3, 1)
    X[:8, 2] = 2.0 * X[:8, 1]  # leading block is collinear
    sse, ok = kernels.prefix_sse(X, y, backend=backend)
    assert not ok[:9].any()
    assert ok[9:].all()


@pytest.mark.parametrize("backend", BACKENDS)
def test_pair_sse_matches_lstsq(backend):
    X0, y0 = _data(12, 3, 2)
    X1, y1 = _data(9, 3, 3)
    sse, ok = kernels.pair_sse(X0, y0, X1, y1, backend=backend)
    assert sse.shape == (13, 10)
    for k0 in range(13):
        for k1 in range(10):
            ref = lstsq_sse(np.vstack([X0[:k0], X1[:k1]]), np.concatenate([y0[:k0], y1[:k1]]))
            assert ok[k0, k1] == (ref is not None)
            if ref is not None:
                assert sse[k0, k1] == pytest.approx(ref, rel=1e-10, abs=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
def test_backends_agree():
    X, y = _data(300, 8, 4)
    a, oka = kernels.prefix_sse(X, y, backend="compiled")
    b, okb = kernels.prefix_sse(X, y, backend="python")
    np.testing.assert_array_equal(oka, okb)
    np.testing.assert_allclose(a[oka], b[okb], rtol=1e-11, atol=1e-12)
    X1, y1 = _data(70, 8, 5)
    a, oka = kernels.pair_sse(X[:90], y[:90], X1, y1, backend="compiled")
    b, okb = kernels.pair_sse(X[:90], y[:90], X1, y1, backend="python")
    np.testing.assert_array_equal(oka, okb)
    np.testing.assert_allclose(a[oka], b[okb], rtol=1e-11, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.prefix_sse(np.ones((3, 1)), np.ones(3), backend="fortran")
