"""Least-squares updating kernels.

The compiled extension is used when it was built; otherwise, or when
``REGIME_SPLIT_PURE=1`` is set, the numpy fallback is loaded. Both expose
``prefix_sse`` and ``pair_sse`` with identical contracts.
"""

import os

import numpy as np

from . import _givens_py

if os.environ.get("REGIME_SPLIT_PURE", "") not in ("", "0"):
    _impl = _givens_py
    BACKEND = "python"
else:
    try:
        from . import _givens as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _givens_py
        BACKEND = "python"


def rank_rtol(n, p):
    return np.finfo(float).eps * max(n, p) * 16


def prefix_sse(X, y, rtol=None, backend=None):
    """SSE of the least-squares fit on each leading block of rows.

    Returns ``(sse, ok)``, both of length ``n + 1``; ``sse[k]`` belongs to the
    first ``k`` rows and ``ok[k]`` says whether that block has full column
    rank.
    """
    impl = _select(backend)
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if rtol is None:
        rtol = rank_rtol(*X.shape)
    return impl.prefix_sse(X, y, float(rtol))


def pair_sse(X0, y0, X1, y1, rtol=None, backend=None):
    """SSE of fits on the first ``k0`` rows of group 0 plus first ``k1`` of group 1.

    Returns ``(sse, ok)`` with shape ``(n0 + 1, n1 + 1)``.
    """
    impl = _select(backend)
    X0 = np.ascontiguousarray(X0, dtype=float)
    X1 = np.ascontiguousarray(X1, dtype=float)
    if rtol is None:
        rtol = rank_rtol(X0.shape[0] + X1.shape[0], X0.shape[1])
    return impl.pair_sse(X0, np.ascontiguousarray(y0, dtype=float), X1,
                         np.ascontiguousarray(y1, dtype=float), float(rtol))


def _select(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _givens_py
    if backend == "compiled":
        from . import _givens
        return _givens
    raise ValueError(f"unknown backend {backend!r}")
