"""Bound the cross-validation error under label flips and derive KSet, the
superset of K values that can be optimal for any training set within n
flips.

Feasibility questions about a neighbor histogram reduce to integer
arithmetic.  Flipping a competitor element to the target label both lowers
the competitor and raises the target, so for a total of F flips the target
count becomes #y + F and each competing label l needs
max(0, #l - (#y + F) + 1) of the flips; a histogram is repairable iff some
F <= n covers all such deficits.  The search is exact, runs in O(n q), and
avoids the unsoundness an LP relaxation would introduce on integer-only
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .knn import FoldEval, k_nearest, make_folds, mean_fold_rates, validate_grid


def _check_hist(counts: np.ndarray, y: int) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or counts.size < 2:
        raise ValueError("histogram must be a 1-D array over q >= 2 labels")
    if np.any(counts < 0):
        raise ValueError("histogram counts must be nonnegative")
    if not 0 <= y < counts.size:
        raise ValueError(f"label {y} outside histogram of size {counts.size}")
    return counts


def flip_feasible(counts, y: int, n: int) -> bool:
    """Can at most n flips make y the strictly most frequent label?

    Flips only move elements from competing labels to y; deficits are
    capped by the counts actually available.
    """
    counts = _check_hist(counts, y)
    if n < 0:
        raise ValueError(f"flip budget must be >= 0, got {n}")
    cy = int(counts[y])
    others = np.delete(counts, y)
    fmax = min(int(n), int(others.sum()))
    for F in range(fmax + 1):
        needed = np.maximum(others - (cy + F) + 1, 0)
        if int(needed.sum()) <= F:
            return True
    return False


def necessary_conditions(counts, y: int, n: int) -> bool:
    """Cheap tests that every strictly repairable histogram satisfies.

    Condition 1 sums the per-label strict-majority inequalities at the full
    flip budget; condition 2 requires the strongest competitor's lead over
    y to be closable with n flips (each flip closes it by 2).  A False here
    implies flip_feasible is False.
    """
    counts = _check_hist(counts, y)
    q = counts.size
    cy = int(counts[y])
    others = np.delete(counts, y)
    total = int(others.sum())
    top = int(others.max())
    cond1 = (total - n) < (q - 1) * (cy + n)
    cond2 = (top - cy) < 2 * n if n > 0 else top < cy
    return cond1 and cond2


def feasible_win(counts, y: int, n: int) -> bool:
    """Can at most n flips make the concrete predictor output y?

    Like flip_feasible, but y only needs to strictly beat labels with a
    smaller id; equal counts against larger ids already resolve to y under
    the smallest-id tie-break.
    """
    counts = _check_hist(counts, y)
    if n < 0:
        raise ValueError(f"flip budget must be >= 0, got {n}")
    cy = int(counts[y])
    ids = np.arange(counts.size)
    comp = ids != y
    margin = np.where(ids < y, 1, 0)[comp]
    others = counts[comp]
    fmax = min(int(n), int(others.sum()))
    for F in range(fmax + 1):
        needed = np.maximum(others - (cy + F) + margin, 0)
        if int(needed.sum()) <= F:
            return True
    return False


def _neighbor_hist(ds: Dataset, K: int, x) -> np.ndarray:
    idx = k_nearest(ds, x, K)
    return np.bincount(ds.y[idx], minlength=ds.schema.n_classes)


def abs_may_err(ds_train: Dataset, n: int, K: int, x, y: int) -> bool:
    """True iff some assignment of at most n flips can misclassify (x, y).

    The most damaging flips move y-labeled neighbors to the strongest
    competing label; after them, any competitor count reaching the y count
    reads as an error so the answer covers every tie-break policy.
    """
    counts = _neighbor_hist(ds_train, K, x)
    return _may_err_hist(counts, y, n)


def _may_err_hist(counts: np.ndarray, y: int, n: int) -> bool:
    counts = _check_hist(counts, y)
    cy = int(counts[y])
    masked = counts.copy()
    masked[y] = -1
    top_other = int(masked.max())
    moved = min(int(n), cy)
    return top_other + moved >= cy - moved


def abs_must_err(ds_train: Dataset, n: int, K: int, x, y: int) -> bool:
    """True iff (x, y) is misclassified under every assignment of at most
    n flips: no repair can make the predictor output y, accounting for the
    smallest-id tie-break."""
    counts = _neighbor_hist(ds_train, K, x)
    cy = int(counts[y])
    masked = counts.copy()
    masked[y] = -1
    if int(masked.max()) - cy > 2 * n:  # lead not closable, skip exact search
        return True
    return not feasible_win(counts, y, n)


def _may_err_batch(counts: np.ndarray, yv: np.ndarray, n: int) -> np.ndarray:
    """Vectorized abs_may_err over histograms of shape (m, nk, q)."""
    cy = np.take_along_axis(counts, yv[:, None, None], axis=2)[:, :, 0]
    masked = counts.copy()
    np.put_along_axis(masked, yv[:, None, None], -1, axis=2)
    top_other = masked.max(axis=2)
    moved = np.minimum(n, cy)
    return top_other + moved >= cy - moved


def _must_err_batch(counts: np.ndarray, yv: np.ndarray, n: int) -> np.ndarray:
    """Vectorized abs_must_err over histograms of shape (m, nk, q).

    The deficit sum is monotone in the flip total, so checking the largest
    admissible total is exact.
    """
    q = counts.shape[2]
    cy = np.take_along_axis(counts, yv[:, None, None], axis=2)[:, :, 0]
    avail = counts.sum(axis=2) - cy
    fmax = np.minimum(n, avail)
    margin = (np.arange(q)[None, None, :] < yv[:, None, None]).astype(np.int64)
    needed = np.maximum(counts - (cy + fmax)[:, :, None] + margin, 0)
    # The y column contributes max(0, -fmax + 0) = 0.
    feasible = needed.sum(axis=2) <= fmax
    return ~feasible


@dataclass(frozen=True)
class ErrorBounds:
    """Per-candidate error-rate interval plus the per-fold certain/possible
    misclassification sets behind it."""

    grid: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray
    eval_idx: list[np.ndarray]
    must: list[np.ndarray]   # per fold: (n_eval, len(grid)) bool
    may: list[np.ndarray]

    def __post_init__(self):
        if np.any(self.lower > self.upper):
            raise ValueError("lower error bound exceeds upper bound")


@dataclass(frozen=True)
class KSet:
    """Candidate k values that may be optimal for some admissible training
    set, with the minimal upper bound that selected them."""

    ks: tuple[int, ...]
    min_ub: float
    grid: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if not self.ks:
            raise ValueError("KSet cannot be empty")

    def __iter__(self):
        return iter(self.ks)

    def __contains__(self, k):
        return k in self.ks


def kset_from_bounds(grid, lower, upper) -> KSet:
    """Keep every candidate whose lower bound does not exceed the smallest
    upper bound."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(lower > upper):
        raise ValueError("lower error bound exceeds upper bound")
    min_ub = float(upper.min())
    ks = tuple(int(k) for k, lb in zip(grid, lower) if lb <= min_ub)
    return KSet(ks, min_ub, tuple(int(k) for k in grid),
                tuple(map(float, lower)), tuple(map(float, upper)))


def compute_error_bounds(ds: Dataset, n: int, p: int, grid, seed: int,
                         jobs: int = 1) -> ErrorBounds:
    """Fold-by-fold over/under-approximation of the cross-validation error
    for every candidate k, under at most n label flips."""
    if not 0 <= n <= len(ds):
        raise ValueError(f"flip budget must be in [0, {len(ds)}], got {n}")
    grid = validate_grid(grid, len(ds), p)
    folds = make_folds(len(ds), p, seed)
    fe = FoldEval(ds.X, folds, max(grid), jobs=jobs)
    q = ds.schema.n_classes
    ub_counts = np.empty((p, len(grid)), dtype=np.int64)
    lb_counts = np.empty((p, len(grid)), dtype=np.int64)
    may_sets: list[np.ndarray] = []
    must_sets: list[np.ndarray] = []
    for f in range(p):
        counts = fe.label_counts(f, ds.y, grid, q)
        yv = ds.y[fe.eval_idx[f]]
        may = _may_err_batch(counts, yv, n)
        must = _must_err_batch(counts, yv, n)
        ub_counts[f] = may.sum(axis=0)
        lb_counts[f] = must.sum(axis=0)
        may_sets.append(may)
        must_sets.append(must)
    upper = mean_fold_rates(ub_counts, fe.sizes)
    lower = mean_fold_rates(lb_counts, fe.sizes)
    return ErrorBounds(grid, lower, upper, fe.eval_idx, must_sets, may_sets)


def abs_knn_learn(ds: Dataset, n: int, p: int = 5, grid=(1, 3, 5, 7, 9, 15, 25),
                  seed: int = 0, jobs: int = 1) -> KSet:
    """Sound superset of the K values cross validation can select over all
    training sets within n label flips of ds.  Folds are built from the
    seed exactly as in knn_learn so the two agree fold-for-fold."""
    eb = compute_error_bounds(ds, n, p, grid, seed, jobs)
    return kset_from_bounds(eb.grid, eb.lower, eb.upper)
