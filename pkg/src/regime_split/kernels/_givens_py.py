"""Pure-numpy versions of the row-updating least-squares kernels.

Same contracts as the compiled module. Rows are folded in blocks: the
current triangular factor of ``[X | y]`` is stacked with every prefix of the
next block (zero-padded, which leaves the factor unchanged) and all stacks
go through one batched Householder QR. The last diagonal entry of each
factor is the root SSE of the corresponding prefix.
"""

import numpy as np

_MAX_BYTES = 32 << 20


def _block_size(batch, q):
    m = 64
    while m > 1 and batch * m * (q + m) * q * 8 > _MAX_BYTES:
        m //= 2
    return m


def _fold(base, A, keep=False):
    """Factors after each prefix of ``A`` folded into each of ``base``.

    ``base`` is (B, q, q) upper triangular, ``A`` is (n, q). Returns the
    diagonals, shape (B, n, q), and either the final factors (B, q, q) or,
    with ``keep``, every factor (B, n, q, q).
    """
    B, q, _ = base.shape
    n = A.shape[0]
    diags = np.empty((B, n, q))
    kept = np.empty((B, n, q, q)) if keep else None
    m = _block_size(B, q)
    tri = np.tril(np.ones((m, m), dtype=bool))
    for s in range(0, n, m):
        blk = A[s:s + m]
        mb = blk.shape[0]
        S = np.zeros((B, mb, q + mb, q))
        S[:, :, :q] = base[:, None]
        # stack j holds rows 0..j of the block
        S[:, :, q:] = np.where(tri[:mb, :mb, None], blk[None, :, :], 0.0)[None]
        R = np.linalg.qr(S, mode="r")
        diags[:, s:s + mb] = np.diagonal(R, axis1=-2, axis2=-1)
        if keep:
            kept[:, s:s + mb] = R
        base = R[:, -1]
    return diags, (kept if keep else base)


def _summarize(diags, p, rtol):
    sse = diags[..., p] ** 2
    d = np.abs(diags[..., :p])
    dmax = d.max(axis=-1)
    ok = (dmax > 0) & (d.min(axis=-1) > rtol * dmax)
    return sse, ok


def prefix_sse(X, y, rtol):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n, p = X.shape
    sse = np.zeros(n + 1)
    ok = np.zeros(n + 1, dtype=bool)
    if n:
        diags, _ = _fold(np.zeros((1, p + 1, p + 1)), np.column_stack([X, y]))
        sse[1:], ok[1:] = _summarize(diags[0], p, rtol)
    return sse, ok


def pair_sse(X0, y0, X1, y1, rtol):
    X0 = np.ascontiguousarray(X0, dtype=float)
    X1 = np.ascontiguousarray(X1, dtype=float)
    n0, p = X0.shape
    n1 = X1.shape[0]
    if X1.shape[1] != p:
        raise ValueError("groups must have the same number of columns")
    q = p + 1
    A0 = np.column_stack([X0, np.asarray(y0, dtype=float)])
    A1 = np.column_stack([X1, np.asarray(y1, dtype=float)])
    # factor after each group-0 prefix, including the empty one
    bases = np.zeros((n0 + 1, q, q))
    d0 = np.zeros((n0 + 1, q))
    if n0:
        diags, kept = _fold(np.zeros((1, q, q)), A0, keep=True)
        d0[1:], bases[1:] = diags[0], kept[0]
    sse = np.zeros((n0 + 1, n1 + 1))
    ok = np.zeros((n0 + 1, n1 + 1), dtype=bool)
    sse[1:, 0], ok[1:, 0] = _summarize(d0[1:], p, rtol)
    if n1:
        diags, _ = _fold(bases, A1)
        sse[:, 1:], ok[:, 1:] = _summarize(diags, p, rtol)
    return sse, ok
