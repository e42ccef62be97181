import math

import numpy as np
import pytest

from knncert.dataset import AttributeSpec, Dataset, Schema
from knncert.knn import (
    FoldEval,
    distance,
    freq_label,
    k_nearest,
    knn_learn,
    knn_predict,
    make_folds,
    max_grid_k,
    validate_grid,
)

from conftest import make_instance


def brute_k_nearest(ds, x, K, metric="euclidean"):
    """Full sort of every (distance, index) pair."""
    pairs = sorted(
        (distance(ds.X[i], x, metric), i) for i in range(len(ds))
    )
    return [i for _, i in pairs[:K]]


def brute_predict(ds, K, x, metric="euclidean"):
    idx = brute_k_nearest(ds, x, K, metric)
    counts = {}
    for i in idx:
        counts[int(ds.y[i])] = counts.get(int(ds.y[i]), 0) + 1
    best = max(counts.values())
    return min(lab for lab, c in counts.items() if c == best)


def brute_learn(ds, p, grid, seed, metric="euclidean"):
    """Independent cross-validation reimplementation with python loops."""
    folds = make_folds(len(ds), p, seed)
    rates = []
    for k in grid:
        total = 0.0
        for f in range(p):
            ev = folds.members(f)
            tr = np.nonzero(folds.assignment != f)[0]
            sub = Dataset(ds.schema, ds.X[tr], ds.y[tr])
            errs = sum(
                1 for i in ev if brute_predict(sub, k, ds.X[i], metric) != ds.y[i]
            )
            total += errs / len(ev)
        rates.append(total / p)
    best = min(rates)
    return next(k for k, r in zip(grid, rates) if r == best)


class TestDistance:
    def test_identity(self):
        assert distance([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_three_four_five(self):
        assert distance([0, 0], [3, 4]) == 5.0

    def test_manhattan(self):
        assert distance([0, 0], [3, 4], "manhattan") == 7.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            distance([0, 0], [1, 2, 3])

    def test_unknown_metric(self):
        with pytest.raises(ValueError, match="metric"):
            distance([0], [1], "cosine")


class TestFreqLabel:
    def test_strict_majority(self):
        assert freq_label([2, 1]) == 0
        assert freq_label([0, 3, 1]) == 1

    def test_tie_breaks_to_smallest_id(self):
        assert freq_label([2, 2]) == 0
        assert freq_label([0, 2, 2]) == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            freq_label([0, 0])


class TestKNearest:
    def test_full_set(self, rng):
        ds = make_instance(rng, n=12)
        assert sorted(k_nearest(ds, ds.X[0], len(ds))) == list(range(len(ds)))

    def test_distance_tie_breaks_to_lower_index(self):
        schema = Schema((AttributeSpec("a", "numerical", -5, 5),), "y", ("0", "1"))
        X = np.array([[2.0], [-1.0], [1.0], [0.5]])
        ds = Dataset(schema, X, np.array([0, 1, 0, 1]))
        # samples 1 and 2 are equidistant from 0; index 1 must win the last slot
        assert k_nearest(ds, np.array([0.0]), 2).tolist() == [3, 1]

    def test_matches_exhaustive_sort(self, rng):
        for _ in range(10):
            ds = make_instance(rng, n=20, d_num=3)
            x = rng.uniform(0, 10, size=ds.schema.dims)
            got = k_nearest(ds, x, 5).tolist()
            assert got == brute_k_nearest(ds, x, 5)

    def test_manhattan_matches_exhaustive(self, rng):
        ds = make_instance(rng, n=20, d_num=3)
        x = rng.uniform(0, 10, size=ds.schema.dims)
        got = k_nearest(ds, x, 5, "manhattan").tolist()
        assert got == brute_k_nearest(ds, x, 5, "manhattan")

    def test_k_out_of_range(self, rng):
        ds = make_instance(rng, n=5)
        with pytest.raises(ValueError):
            k_nearest(ds, ds.X[0], 0)
        with pytest.raises(ValueError):
            k_nearest(ds, ds.X[0], 6)

    def test_permutation_invariance(self, rng):
        ds = make_instance(rng, n=15)
        x = rng.uniform(0, 10, size=ds.schema.dims)
        perm = rng.permutation(len(ds))
        ds2 = Dataset(ds.schema, ds.X[perm], ds.y[perm])
        orig = set(k_nearest(ds, x, 4).tolist())
        back = set(int(perm[i]) for i in k_nearest(ds2, x, 4))
        assert orig == back


class TestPredict:
    def test_unanimous(self, rng):
        ds = make_instance(rng, n=10)
        ds = Dataset(ds.schema, ds.X, np.ones(len(ds), dtype=int))
        for k in (1, 3, 10):
            assert knn_predict(ds, k, ds.X[2]) == 1

    def test_majority_of_three(self):
        schema = Schema((AttributeSpec("a", "numerical", 0, 10),), "y", ("0", "1"))
        ds = Dataset(schema, np.array([[1.0], [2.0], [3.0], [9.0]]),
                     np.array([1, 1, 0, 0]))
        assert knn_predict(ds, 3, np.array([1.5])) == 1

    def test_self_prediction_at_k1(self, rng):
        ds = make_instance(rng, n=15)
        assert knn_predict(ds, 1, ds.X[4]) == ds.y[4]

    def test_matches_brute_force(self, rng):
        for _ in range(10):
            ds = make_instance(rng, n=18, q=3)
            x = rng.uniform(0, 10, size=ds.schema.dims)
            assert knn_predict(ds, 5, x) == brute_predict(ds, 5, x)


class TestFolds:
    def test_sizes_differ_by_at_most_one(self, rng):
        for n, p in [(10, 3), (52, 5), (17, 4), (8, 8)]:
            sizes = make_folds(n, p, 0).sizes()
            assert sizes.sum() == n
            assert sizes.max() - sizes.min() <= 1
            assert sizes.min() >= n // p

    def test_deterministic(self):
        a = make_folds(30, 5, 7).assignment
        b = make_folds(30, 5, 7).assignment
        assert np.array_equal(a, b)

    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            make_folds(5, 1, 0)
        with pytest.raises(ValueError):
            make_folds(5, 6, 0)

    def test_max_grid_k(self):
        assert max_grid_k(52, 5) == 41
        assert max_grid_k(10, 3) == 6

    def test_validate_grid(self):
        assert validate_grid([5, 1, 3], 20, 5) == (1, 3, 5)
        with pytest.raises(ValueError):
            validate_grid([], 20, 5)
        with pytest.raises(ValueError):
            validate_grid([17], 20, 5)


class TestLearn:
    def test_single_candidate(self, rng):
        ds = make_instance(rng, n=15)
        assert knn_learn(ds, p=3, grid=[3], seed=1) == 3

    def test_matches_brute_force_cv(self, rng):
        for trial in range(5):
            ds = make_instance(rng, n=16, q=2, noise=0.2)
            grid = (1, 3, 5)
            assert knn_learn(ds, 4, grid, seed=trial) == brute_learn(
                ds, 4, grid, seed=trial
            )

    def test_argmin_tie_breaks_to_smallest_k(self, rng):
        # unanimous labels: every k has zero error, so the smallest wins
        ds = make_instance(rng, n=12)
        ds = Dataset(ds.schema, ds.X, np.zeros(len(ds), dtype=int))
        assert knn_learn(ds, p=3, grid=[7, 3, 5], seed=0) == 3

    def test_fold_eval_counts_match_predict(self, rng):
        ds = make_instance(rng, n=14, q=3)
        folds = make_folds(len(ds), 3, 2)
        fe = FoldEval(ds.X, folds, 5)
        for f in range(3):
            counts = fe.label_counts(f, ds.y, [5], ds.schema.n_classes)
            ev = fe.eval_idx[f]
            tr = fe.train_idx[f]
            sub = Dataset(ds.schema, ds.X[tr], ds.y[tr])
            for row, i in enumerate(ev):
                pred = brute_predict(sub, 5, ds.X[i])
                assert int(np.argmax(counts[row, 0])) == pred
