"""Ground-truth fairness by explicit enumeration.

Every training set within n label flips is enumerated (refusing above a
configurable cap) and the full concrete pipeline is re-run on each; for
protected attributes the finitely many value combinations are enumerated
as well.  Epsilon perturbations form an infinite set, so for those the
oracle can only falsify, by sampling.

Label flips never change distances, so the neighbor lists of every probe
point are computed once and each enumerated variant reduces to label
lookups.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Optional

import numpy as np

from .dataset import Dataset
from .errors import OracleCapError
from .knn import FoldEval, k_nearest, make_folds, mean_fold_rates, validate_grid

DEFAULT_CAP = 10**6

CleanSetSpec = tuple[tuple[int, int], ...]

_SPEC_CHUNK = 2048


def count_clean_sets(size: int, q: int, n: int) -> int:
    """1 + sum over m=1..n of C(size, m) * (q-1)^m."""
    return 1 + sum(math.comb(size, m) * (q - 1) ** m for m in range(1, n + 1))


def enum_clean_sets(ds: Dataset, n: int, cap: int = DEFAULT_CAP) -> Iterator[CleanSetSpec]:
    """Yield every flip assignment of at most n labels, each flipped label
    taking each of the q-1 alternative values, starting with the empty
    assignment.  Refuses when the total count exceeds the cap."""
    if not 0 <= n <= len(ds):
        raise ValueError(f"flip budget must be in [0, {len(ds)}], got {n}")
    q = ds.schema.n_classes
    total = count_clean_sets(len(ds), q, n)
    if total > cap:
        raise OracleCapError(total, cap)
    labels = ds.y
    yield ()
    for m in range(1, n + 1):
        for idxs in itertools.combinations(range(len(ds)), m):
            alternatives = [
                [lab for lab in range(q) if lab != labels[i]] for i in idxs
            ]
            for news in itertools.product(*alternatives):
                yield tuple(zip(idxs, news))


def apply_clean_set(labels: np.ndarray, spec: CleanSetSpec) -> np.ndarray:
    out = labels.copy()
    for i, lab in spec:
        out[i] = lab
    return out


def protected_variants(ds: Dataset, x, include_original: bool = False) -> list[np.ndarray]:
    """Inputs obtained from x by re-assigning protected attributes, one per
    combination of coded values that differs from x (all combinations when
    include_original is set)."""
    x = np.asarray(x, dtype=np.float64)
    prot = ds.schema.protected_indices
    if not prot:
        return [x.copy()] if include_original else []
    choices = [ds.schema.attribute_values(i) for i in prot]
    out = []
    for combo in itertools.product(*choices):
        v = x.copy()
        v[list(prot)] = combo
        if include_original or not np.array_equal(v, x):
            out.append(v)
    return out


class _LabelEval:
    """Precomputed neighbor lists for the learning folds and a set of probe
    points; evaluating a label variant costs only lookups."""

    def __init__(self, ds: Dataset, probes: list[np.ndarray], kmax: int,
                 p: int, grid, seed: int):
        self.grid = grid
        self.q = ds.schema.n_classes
        folds = make_folds(len(ds), p, seed)
        self.fe = FoldEval(ds.X, folds, kmax)
        self.truth = [ds.y[ev] for ev in self.fe.eval_idx]
        self.probe_topk = [k_nearest(ds, v, kmax) for v in probes]

    def learned_k(self, labels: np.ndarray) -> int:
        counts = np.empty((self.fe.folds.p, len(self.grid)), dtype=np.int64)
        for f in range(self.fe.folds.p):
            hist = self.fe.label_counts(f, labels, self.grid, self.q)
            pred = np.argmax(hist, axis=2)
            truth = labels[self.fe.eval_idx[f]]
            counts[f] = np.sum(pred != truth[:, None], axis=0)
        rates = mean_fold_rates(counts, self.fe.sizes)
        return self.grid[int(np.argmin(rates))]

    def predict(self, labels: np.ndarray, probe: int, K: int) -> int:
        lab = labels[self.probe_topk[probe][:K]]
        return int(np.argmax(np.bincount(lab, minlength=self.q)))


def oracle_fair(ds: Dataset, n: int, x, y: int, variant: str = "label_flip",
                k_policy: str = "relearn", K: Optional[int] = None,
                p: int = 5, grid=(1, 3, 5, 7, 9, 15, 25), seed: int = 0,
                cap: int = DEFAULT_CAP) -> bool:
    """True iff the concrete pipeline predicts y for every enumerated clean
    set (and, for the individual-fairness variant, every protected-value
    variant of x).

    k_policy "relearn" re-runs cross validation on each clean set, which is
    the ground-truth reading of the pipeline; "fixed" keeps the supplied K.
    """
    if variant not in ("label_flip", "label_flip+individual"):
        raise ValueError(f"enumeration oracle cannot handle variant {variant!r}")
    if k_policy not in ("relearn", "fixed"):
        raise ValueError(f"unknown k_policy {k_policy!r}")
    if k_policy == "fixed" and K is None:
        raise ValueError("fixed k_policy requires K")
    grid = validate_grid(grid, len(ds), p)
    x = np.asarray(x, dtype=np.float64)
    probes = [x]
    if variant == "label_flip+individual":
        probes += protected_variants(ds, x)
    kmax = max(grid) if k_policy == "relearn" else int(K)
    if k_policy == "fixed":
        kmax = max(kmax, 1)
    ev = _LabelEval(ds, probes, max(kmax, max(grid)), p, grid, seed)
    for spec in enum_clean_sets(ds, n, cap):
        labels = apply_clean_set(ds.y, spec)
        k_used = ev.learned_k(labels) if k_policy == "relearn" else int(K)
        for probe in range(len(probes)):
            if ev.predict(labels, probe, k_used) != y:
                return False
    return True


def sample_falsify_epsilon(ds: Dataset, n: int, K: int, x, y: int, spec,
                           samples: int, seed: int = 0,
                           cap: int = DEFAULT_CAP) -> Optional[tuple[np.ndarray, CleanSetSpec]]:
    """Search for a perturbed input and clean set under which prediction
    differs from y.

    Draws uniform offsets inside the box dims of the perturbation spec,
    cycles protected dims over all coded values, and checks each probe
    against every enumerated clean set with the given fixed K.  Returns the
    first counterexample or None.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    specs = list(enum_clean_sets(ds, n, cap))
    label_matrix = np.vstack([apply_clean_set(ds.y, s) for s in specs])
    q = ds.schema.n_classes
    from .dataset import DIM_BOX

    box = np.asarray(spec.kind) == DIM_BOX
    for _ in range(samples):
        probe = x.copy()
        if box.any():
            lo, hi = spec.resolve(x)
            probe[box] = x[box] + rng.uniform(lo[box], hi[box])
        for variant in protected_variants(ds, probe, include_original=True) or [probe]:
            topk = k_nearest(ds, variant, K)
            for s in range(0, len(specs), _SPEC_CHUNK):
                lab = label_matrix[s : s + _SPEC_CHUNK][:, topk]
                onehot = lab[:, :, None] == np.arange(q)[None, None, :]
                pred = np.argmax(onehot.sum(axis=1), axis=1)
                bad = np.nonzero(pred != y)[0]
                if bad.size:
                    return variant, specs[s + int(bad[0])]
    return None
