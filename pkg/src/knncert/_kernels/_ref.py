"""Numpy reference kernels.

These are the fallback implementations selected when the compiled extension
is unavailable, and the ground truth the compiled kernels are tested against.
Both backends accumulate per-dimension terms in ascending dimension order so
results are bit-identical (the extension is compiled with fp-contract off).
"""

import numpy as np

BACKEND = "numpy"

# Rough cap on scratch elements per distance chunk (~256 MB of float64).
_CHUNK_ELEMS = 32_000_000

METRIC_SQEUCLIDEAN = 0
METRIC_MANHATTAN = 1


def bound_sums_sq(X, x, lo, hi):
    """Summed per-dimension squared-distance bounds against every row of X.

    For each training row t the i-th term is the exact min/max of
    (x_i - t_i + delta)^2 over delta in [lo_i, hi_i].  Returns float64
    arrays (lb2, ub2) of length len(X) holding the summed squared bounds.
    """
    n, d = X.shape
    lb2 = np.zeros(n, dtype=np.float64)
    ub2 = np.zeros(n, dtype=np.float64)
    for i in range(d):
        a = x[i] - X[:, i]
        alo = a + lo[i]
        ahi = a + hi[i]
        slo = alo * alo
        shi = ahi * ahi
        ub2 += np.maximum(slo, shi)
        lb = np.minimum(slo, shi)
        lb[(alo <= 0.0) & (ahi >= 0.0)] = 0.0
        lb2 += lb
    return lb2, ub2


def _pairwise(Xtrain, Xeval, metric):
    """Distance block, accumulated dimension by dimension."""
    out = np.zeros((Xeval.shape[0], Xtrain.shape[0]), dtype=np.float64)
    for i in range(Xtrain.shape[1]):
        diff = Xeval[:, i, None] - Xtrain[None, :, i]
        if metric == METRIC_SQEUCLIDEAN:
            out += diff * diff
        else:
            out += np.abs(diff)
    return out


def _topk_rows(dist, kmax):
    """Per-row k smallest by (distance, column index) lexicographic order."""
    nrows, ncols = dist.shape
    if ncols <= kmax:
        order = np.lexsort((np.broadcast_to(np.arange(ncols), dist.shape), dist), axis=1)
        return np.ascontiguousarray(order[:, :ncols]).astype(np.int64)

    part = np.argpartition(dist, kmax - 1, axis=1)[:, :kmax]
    pv = np.take_along_axis(dist, part, axis=1)
    kth = pv.max(axis=1)
    # Exact-tie handling: if samples outside the partition share the k-th
    # smallest value, the set must be rebuilt so the lowest indices win.
    n_sel = (pv == kth[:, None]).sum(axis=1)
    n_all = (dist == kth[:, None]).sum(axis=1)
    order = np.lexsort((part, pv), axis=1)
    out = np.take_along_axis(part, order, axis=1).astype(np.int64)
    for r in np.nonzero(n_all != n_sel)[0]:
        row = dist[r]
        v = kth[r]
        below = np.nonzero(row < v)[0]
        at = np.nonzero(row == v)[0][: kmax - below.size]
        cand = np.concatenate([below, at])
        cand = cand[np.lexsort((cand, row[cand]))]
        out[r] = cand
    return out


def topk_lex(Xtrain, Xeval, kmax, metric):
    """Indices of the kmax nearest training rows for each eval row.

    Rows are ordered by (distance, training index) ascending, which makes
    the result deterministic under exact distance ties.  Returns an int64
    array of shape (len(Xeval), min(kmax, len(Xtrain))).
    """
    ntrain = Xtrain.shape[0]
    k = min(kmax, ntrain)
    chunk = max(1, _CHUNK_ELEMS // max(ntrain, 1))
    blocks = []
    for s in range(0, Xeval.shape[0], chunk):
        dist = _pairwise(Xtrain, Xeval[s : s + chunk], metric)
        blocks.append(_topk_rows(dist, k))
    return np.vstack(blocks) if blocks else np.empty((0, k), dtype=np.int64)
