"""Kernel backend selection.

The compiled extension is preferred; the numpy reference implementation is
used when the extension is missing or when ``KNNCERT_BACKEND=numpy`` is set.
Both produce bit-identical results.
"""

import os

import numpy as np

from . import _ref

if os.environ.get("KNNCERT_BACKEND", "").lower() == "numpy":
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND
METRIC_SQEUCLIDEAN = _ref.METRIC_SQEUCLIDEAN
METRIC_MANHATTAN = _ref.METRIC_MANHATTAN


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def bound_sums_sq(X, x, lo, hi):
    """Summed squared distance bounds of each row of X against the box
    around x; see ``_ref.bound_sums_sq``."""
    return _impl.bound_sums_sq(_c64(X), _c64(x), _c64(lo), _c64(hi))


def topk_lex(Xtrain, Xeval, kmax, metric=METRIC_SQEUCLIDEAN):
    """Per eval row, the kmax nearest training indices ordered by
    (distance, index); see ``_ref.topk_lex``."""
    return _impl.topk_lex(_c64(Xtrain), _c64(Xeval), int(kmax), int(metric))
