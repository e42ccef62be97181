"""Concrete KNN: prediction and p-fold cross-validated selection of K.

All tie-breaks are pinned so results are reproducible and comparable with
the enumeration oracle: label-frequency ties go to the smallest label id,
distance ties to the smallest sample index, and error-rate ties to the
smallest candidate k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import Dataset

_METRIC_CODE = {
    "euclidean": _kernels.METRIC_SQEUCLIDEAN,
    "manhattan": _kernels.METRIC_MANHATTAN,
}

DEFAULT_P = 5
DEFAULT_GRID = (1, 3, 5, 7, 9, 15, 25)


def metric_code(metric: str) -> int:
    try:
        return _METRIC_CODE[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None


def distance(a, b, metric: str = "euclidean") -> float:
    """Euclidean or Manhattan distance between two attribute vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    d = a - b
    if metric_code(metric) == _kernels.METRIC_SQEUCLIDEAN:
        return float(np.sqrt(np.sum(d * d)))
    return float(np.sum(np.abs(d)))


def freq_label(counts) -> int:
    """Most frequent label id; ties break to the smallest id."""
    counts = np.asarray(counts)
    if counts.sum() <= 0:
        raise ValueError("empty label histogram")
    return int(np.argmax(counts))


@dataclass(frozen=True)
class FoldPartition:
    """Assignment of sample indices to p folds of near-equal size."""

    p: int
    assignment: np.ndarray

    def __post_init__(self):
        sizes = self.sizes()
        if sizes.max() - sizes.min() > 1:
            raise ValueError("fold sizes must differ by at most 1")

    def members(self, fold: int) -> np.ndarray:
        return np.nonzero(self.assignment == fold)[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.p)


def make_folds(n_samples: int, p: int, seed: int) -> FoldPartition:
    """Seeded unstratified partition into p near-equal folds."""
    if not 2 <= p <= n_samples:
        raise ValueError(f"p must be in [2, {n_samples}], got {p}")
    perm = np.random.default_rng(seed).permutation(n_samples)
    assignment = np.empty(n_samples, dtype=np.int64)
    for i, part in enumerate(np.array_split(perm, p)):
        assignment[part] = i
    return FoldPartition(p, assignment)


def max_grid_k(n_samples: int, p: int) -> int:
    """Largest usable candidate k: the size of the smallest training part,
    |T| - ceil(|T|/p)."""
    return n_samples - -(-n_samples // p)


def validate_grid(grid, n_samples: int, p: int) -> tuple[int, ...]:
    grid = tuple(sorted(set(int(k) for k in grid)))
    if not grid:
        raise ValueError("candidate k grid is empty")
    hi = max_grid_k(n_samples, p)
    for k in grid:
        if not 1 <= k <= hi:
            raise ValueError(f"candidate k={k} outside [1, {hi}]")
    return grid


def k_nearest(ds: Dataset, x, K: int, metric: str = "euclidean") -> np.ndarray:
    """Indices of the K nearest training samples, ordered by
    (distance, index) ascending."""
    if not 1 <= K <= len(ds):
        raise ValueError(f"K must be in [1, {len(ds)}], got {K}")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return _kernels.topk_lex(ds.X, x, K, metric_code(metric))[0]


def knn_predict(ds: Dataset, K: int, x, metric: str = "euclidean") -> int:
    """Majority label among the K nearest neighbors of x."""
    idx = k_nearest(ds, x, K, metric)
    counts = np.bincount(ds.y[idx], minlength=ds.schema.n_classes)
    return freq_label(counts)


def mean_fold_rates(counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Mean per-fold error rate (1/p) * sum_i counts[i]/sizes[i] for each
    candidate column.  Every caller shares this expression so equal count
    tables give bit-equal rates."""
    return (counts / sizes[:, None]).mean(axis=0)


class FoldEval:
    """Precomputed neighbor structure for p-fold cross validation.

    Label flips never move samples in attribute space, so the neighbor
    lists of every held-out sample are shared by all label variants of the
    same attribute matrix; evaluating a variant is a label lookup.
    """

    def __init__(self, X: np.ndarray, folds: FoldPartition, kmax: int,
                 metric: str = "euclidean", jobs: int = 1):
        self.folds = folds
        self.kmax = kmax
        self.eval_idx: list[np.ndarray] = []
        self.train_idx: list[np.ndarray] = []
        self.topk: list[np.ndarray] = []
        code = metric_code(metric)
        n = X.shape[0]
        for f in range(folds.p):
            ev = folds.members(f)
            tr = np.nonzero(folds.assignment != f)[0]
            if kmax > tr.size:
                raise ValueError(f"kmax={kmax} exceeds training part size {tr.size}")
            self.eval_idx.append(ev)
            self.train_idx.append(tr)
            self.topk.append(None)  # type: ignore[arg-type]

        def build(f):
            tr = self.train_idx[f]
            local = _kernels.topk_lex(X[tr], X[self.eval_idx[f]], kmax, code)
            return tr[local]

        if jobs > 1 and folds.p > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(build, range(folds.p)))
        else:
            results = [build(f) for f in range(folds.p)]
        self.topk = results
        self.sizes = folds.sizes().astype(np.float64)

    def label_counts(self, fold: int, labels: np.ndarray, ks, q: int) -> np.ndarray:
        """Histogram of the first k neighbor labels for each held-out sample
        of one fold; shape (n_eval, len(ks), q)."""
        lab = labels[self.topk[fold]]
        onehot = lab[:, :, None] == np.arange(q)[None, None, :]
        cum = np.cumsum(onehot, axis=1, dtype=np.int64)
        sel = np.asarray(ks, dtype=np.int64) - 1
        return cum[:, sel, :]

    def err_counts(self, labels: np.ndarray, ks, q: int) -> np.ndarray:
        """Misclassification counts per (fold, candidate k)."""
        out = np.empty((self.folds.p, len(ks)), dtype=np.int64)
        for f in range(self.folds.p):
            counts = self.label_counts(f, labels, ks, q)
            pred = np.argmax(counts, axis=2)
            truth = labels[self.eval_idx[f]]
            out[f] = np.sum(pred != truth[:, None], axis=0)
        return out

    def err_rates(self, labels: np.ndarray, ks, q: int) -> np.ndarray:
        return mean_fold_rates(self.err_counts(labels, ks, q), self.sizes)


def knn_learn(ds: Dataset, p: int = DEFAULT_P, grid=DEFAULT_GRID,
              seed: int = 0, metric: str = "euclidean") -> int:
    """Cross-validated selection of K: the grid candidate minimizing the
    mean fold error rate, ties to the smallest k."""
    grid = validate_grid(grid, len(ds), p)
    folds = make_folds(len(ds), p, seed)
    fe = FoldEval(ds.X, folds, max(grid), metric)
    rates = fe.err_rates(ds.y, grid, ds.schema.n_classes)
    return grid[int(np.argmin(rates))]
