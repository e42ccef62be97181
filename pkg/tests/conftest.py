"""Shared builders for synthetic certification instances."""

from pathlib import Path

import numpy as np
import pytest

from knncert.dataset import AttributeSpec, Dataset, Schema

DATA = Path(__file__).parent / "data"


def make_schema(d_num: int, q: int, protected: bool = True) -> Schema:
    attrs = [
        AttributeSpec(f"f{i}", "numerical", 0.0, 10.0) for i in range(d_num)
    ]
    if protected:
        attrs.append(AttributeSpec("grp", "binary", 0.0, 1.0, protected=True))
    labels = tuple(f"c{i}" for i in range(q))
    return Schema(tuple(attrs), "label", labels)


def make_instance(rng, n=20, d_num=2, q=2, noise=0.1, protected=True) -> Dataset:
    """Clustered synthetic dataset: labels follow per-class centers in the
    numerical dims with a little noise, plus one random protected binary
    attribute, so certification succeeds on some inputs and fails on
    others."""
    schema = make_schema(d_num, q, protected)
    centers = rng.uniform(1.5, 8.5, size=(q, d_num))
    y = rng.integers(0, q, size=n)
    Xn = np.clip(centers[y] + rng.normal(0, 1.2, size=(n, d_num)), 0.0, 10.0)
    flip = rng.random(n) < noise
    y = np.where(flip, rng.integers(0, q, size=n), y)
    cols = [Xn]
    if protected:
        cols.append(rng.integers(0, 2, size=(n, 1)).astype(float))
    return Dataset(schema, np.hstack(cols), y)


def probe_point(rng, ds: Dataset) -> np.ndarray:
    """A query inside the attribute ranges, independent of training rows."""
    lo, hi = ds.schema.mins(), ds.schema.maxs()
    x = rng.uniform(lo, hi)
    for i, a in enumerate(ds.schema.attributes):
        if a.kind != "numerical":
            x[i] = float(rng.integers(int(a.lo), int(a.hi) + 1))
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
