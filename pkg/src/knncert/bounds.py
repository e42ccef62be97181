"""Sound interval bounds on the distance between a perturbed input and
training samples, and the over-approximated nearest-neighbor set.

For one dimension with constant a = x_i - t_i and offset delta in [lo, hi],
the squared term (a + delta)^2 attains its maximum at an interval endpoint
and its minimum either at an endpoint or at 0 (when -a lies inside the
interval).  Summing the per-dimension extrema bounds the full squared
distance; square roots are applied only when true-distance values are
reported, never while comparing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import Dataset, PerturbationSpec


@dataclass(frozen=True)
class DistanceBound:
    """Interval [lb, ub] on the perturbed distance, in distance units."""

    lb: float
    ub: float

    def __post_init__(self):
        if not 0.0 <= self.lb <= self.ub:
            raise ValueError(f"invalid bound [{self.lb}, {self.ub}]")


def dim_bound(xi: float, ti: float, lo: float, hi: float) -> tuple[float, float]:
    """Exact min/max of (xi - ti + delta)^2 over delta in [lo, hi]."""
    if lo > hi:
        raise ValueError(f"offset interval [{lo}, {hi}] is empty")
    a = xi - ti
    alo = a + lo
    ahi = a + hi
    ub = max(alo * alo, ahi * ahi)
    lb = 0.0 if alo <= 0.0 <= ahi else min(alo * alo, ahi * ahi)
    return lb, ub


def bound_sums(ds: Dataset, x, spec: PerturbationSpec) -> tuple[np.ndarray, np.ndarray]:
    """Summed squared bounds of the perturbed distance from x to every
    training sample; returns (lb2, ub2) arrays of length |T|."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (ds.schema.dims,):
        raise ValueError(f"input has shape {x.shape}, expected ({ds.schema.dims},)")
    if spec.dims != ds.schema.dims:
        raise ValueError("perturbation spec does not match dataset dimensions")
    lo, hi = spec.resolve(x)
    return _kernels.bound_sums_sq(ds.X, x, lo, hi)


def distance_bound(x, t, spec: PerturbationSpec) -> DistanceBound:
    """Interval on the distance between the perturbation set of x and a
    single sample t."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if x.shape != t.shape or x.shape != (spec.dims,):
        raise ValueError("x, t, and spec must agree on dimension")
    lo, hi = spec.resolve(x)
    lb2 = 0.0
    ub2 = 0.0
    for i in range(spec.dims):
        l, u = dim_bound(x[i], t[i], lo[i], hi[i])
        lb2 += l
        ub2 += u
    return DistanceBound(math.sqrt(lb2), math.sqrt(ub2))


def kth_min_ub(ub2: np.ndarray, K: int) -> float:
    """K-th smallest squared upper bound."""
    return float(np.partition(ub2, K - 1)[K - 1])


def over_nn_from_bounds(lb2: np.ndarray, ub2: np.ndarray, K: int) -> np.ndarray:
    """Every sample whose lower bound does not exceed the K-th smallest
    upper bound; the returned index set has at least K members and is a
    superset of the K nearest neighbors of every perturbed input."""
    n = len(ub2)
    if not 1 <= K <= n:
        raise ValueError(f"K must be in [1, {n}], got {K}")
    return np.nonzero(lb2 <= kth_min_ub(ub2, K))[0]


def over_nn(ds: Dataset, x, K: int, spec: PerturbationSpec) -> np.ndarray:
    """Superset of the possible K-nearest-neighbor sets of x under the
    perturbation spec, as ascending sample indices."""
    lb2, ub2 = bound_sums(ds, x, spec)
    return over_nn_from_bounds(lb2, ub2, K)
