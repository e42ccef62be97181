# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract and bit-identical output as ``_ref``.

Accumulation runs in ascending dimension order and the module is compiled
with fp-contract off, so results match the numpy fallback exactly.  The hot
loops release the GIL, which lets the batch work pool scale across threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

BACKEND = "cython"

cdef int _MET_SQEUCLIDEAN = 0

METRIC_SQEUCLIDEAN = 0
METRIC_MANHATTAN = 1


def bound_sums_sq(X, x, lo, hi):
    cdef double[:, ::1] Xv = X
    cdef double[::1] xv = x
    cdef double[::1] lov = lo
    cdef double[::1] hiv = hi
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    lb2_arr = np.zeros(n, dtype=np.float64)
    ub2_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] lb2 = lb2_arr
    cdef double[::1] ub2 = ub2_arr
    cdef Py_ssize_t i, j
    cdef double a, alo, ahi, slo, shi, lsum, usum
    with nogil:
        for j in range(n):
            lsum = 0.0
            usum = 0.0
            for i in range(d):
                a = xv[i] - Xv[j, i]
                alo = a + lov[i]
                ahi = a + hiv[i]
                slo = alo * alo
                shi = ahi * ahi
                usum += slo if slo > shi else shi
                if not (alo <= 0.0 and ahi >= 0.0):
                    lsum += slo if slo < shi else shi
            lb2[j] = lsum
            ub2[j] = usum
    return lb2_arr, ub2_arr


def topk_lex(Xtrain, Xeval, kmax, metric):
    cdef double[:, ::1] Xt = Xtrain
    cdef double[:, ::1] Xe = Xeval
    cdef Py_ssize_t ntrain = Xt.shape[0]
    cdef Py_ssize_t neval = Xe.shape[0]
    cdef Py_ssize_t d = Xt.shape[1]
    cdef Py_ssize_t k = kmax if kmax < ntrain else ntrain
    cdef int met = metric
    out_arr = np.empty((neval, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    dbuf_arr = np.empty(k, dtype=np.float64)
    ibuf_arr = np.empty(k, dtype=np.int64)
    cdef double[::1] dbuf = dbuf_arr
    cdef cnp.int64_t[::1] ibuf = ibuf_arr
    cdef Py_ssize_t e, t, i, j, cnt
    cdef double acc, diff
    if neval == 0 or k == 0:
        return out_arr
    with nogil:
        for e in range(neval):
            cnt = 0
            for t in range(ntrain):
                acc = 0.0
                if met == _MET_SQEUCLIDEAN:
                    for i in range(d):
                        diff = Xe[e, i] - Xt[t, i]
                        acc += diff * diff
                else:
                    for i in range(d):
                        acc += fabs(Xe[e, i] - Xt[t, i])
                # Sorted insertion keyed (distance, index); stable shift keeps
                # equal distances in index order, so ties resolve to the
                # smallest training index.
                if cnt < k:
                    j = cnt
                    cnt += 1
                elif acc < dbuf[k - 1]:
                    j = k - 1
                else:
                    continue
                while j > 0 and dbuf[j - 1] > acc:
                    dbuf[j] = dbuf[j - 1]
                    ibuf[j] = ibuf[j - 1]
                    j -= 1
                dbuf[j] = acc
                ibuf[j] = t
            for j in range(k):
                out[e, j] = ibuf[j]
    return out_arr
