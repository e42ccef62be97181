"""Certify that the predicted label survives input perturbation and up to
n label flips.

The check is tie-break independent: it certifies only when the expected
label wins every size-K subset of the neighbor superset strictly, for every
admissible flip assignment, so it is sound no matter how the concrete
predictor resolves frequency ties.
"""

from __future__ import annotations

import numpy as np

from .bounds import over_nn
from .dataset import Dataset, PerturbationSpec


def abs_same_label(overnn: np.ndarray, K: int, n: int, y: int,
                   labels: np.ndarray, q: int) -> bool:
    """True iff every size-K subset of ``overnn`` predicts y under any
    assignment of at most n label flips.

    Let S be the non-y members of the superset and #y' the highest label
    count within S.  The worst subset keeps all of S plus K - |S| y-labeled
    members, and the worst flips move n of those to y'; y still wins
    strictly iff #y' < K - |S| - 2n.
    """
    overnn = np.asarray(overnn)
    if overnn.size < K:
        raise ValueError(f"neighbor superset smaller than K={K}")
    lab = np.asarray(labels)[overnn]
    counts = np.bincount(lab, minlength=q)
    s_size = int(overnn.size - counts[y])
    if s_size >= K:
        return False
    counts = counts.copy()
    counts[y] = -1
    top_other = int(counts.max()) if q > 1 else 0
    return top_other < K - s_size - 2 * n


def abs_predict_same(ds: Dataset, n: int, K: int, x, y: int,
                     spec: PerturbationSpec) -> bool:
    """True implies KNN with parameter K predicts y for every input in the
    perturbation set of x and every training set within n label flips
    of ds."""
    if not 0 <= n <= len(ds):
        raise ValueError(f"flip budget must be in [0, {len(ds)}], got {n}")
    members = over_nn(ds, x, K, spec)
    return abs_same_label(members, K, n, y, ds.y, ds.schema.n_classes)
