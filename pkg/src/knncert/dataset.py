"""Labeled tabular datasets: schema validation, loading, preprocessing,
and derivation of per-dimension perturbation specifications."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError

KIND_NUMERICAL = "numerical"
KIND_CATEGORICAL = "categorical"
KIND_BINARY = "binary"
_KINDS = (KIND_NUMERICAL, KIND_CATEGORICAL, KIND_BINARY)

# Perturbation flags per dimension.
DIM_FIXED = 0      # offset pinned to 0
DIM_BOX = 1        # offset in a symmetric-around-0 interval [lo, hi]
DIM_FULL = 2       # protected: attribute may take any value in its range

_VAR_FLOOR = 1e-12  # scaling guard for constant columns


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    kind: str
    lo: float
    hi: float
    protected: bool = False


@dataclass(frozen=True)
class Schema:
    """Per-attribute kinds and ranges, the protected index set, and labels."""

    attributes: tuple[AttributeSpec, ...]
    label_name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(self.classes) < 2:
            raise DatasetError("schema needs at least 2 label classes")
        if len(set(self.classes)) != len(self.classes):
            raise DatasetError("duplicate label classes in schema")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate attribute names in schema")
        for a in self.attributes:
            if a.kind not in _KINDS:
                raise DatasetError(f"attribute {a.name!r}: unknown kind {a.kind!r}")
            if not a.lo <= a.hi:
                raise DatasetError(f"attribute {a.name!r}: min {a.lo} > max {a.hi}")
            if a.protected and a.kind == KIND_NUMERICAL:
                raise DatasetError(
                    f"attribute {a.name!r}: protected attributes must be "
                    "categorical or binary"
                )

    @property
    def dims(self) -> int:
        return len(self.attributes)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def protected_indices(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.attributes) if a.protected)

    def mins(self) -> np.ndarray:
        return np.array([a.lo for a in self.attributes], dtype=np.float64)

    def maxs(self) -> np.ndarray:
        return np.array([a.hi for a in self.attributes], dtype=np.float64)

    def attribute_values(self, i: int) -> np.ndarray:
        """All coded values a categorical/binary attribute can take."""
        a = self.attributes[i]
        if a.kind == KIND_NUMERICAL:
            raise DatasetError(f"attribute {a.name!r} is numerical, not coded")
        return np.arange(int(np.ceil(a.lo)), int(np.floor(a.hi)) + 1, dtype=np.float64)


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    y: int


@dataclass(frozen=True)
class Dataset:
    """Immutable attribute matrix plus labels.

    ``source_index[i]`` maps row i back to the row it came from at load
    time; preprocessing that drops rows keeps the remap instead of reusing
    indices.
    """

    schema: Schema
    X: np.ndarray
    y: np.ndarray
    source_index: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or X.shape[1] != self.schema.dims:
            raise DatasetError(
                f"attribute matrix is {X.shape}, schema has {self.schema.dims} dims"
            )
        if y.shape != (X.shape[0],):
            raise DatasetError("label vector length does not match sample count")
        if y.size and (y.min() < 0 or y.max() >= self.schema.n_classes):
            raise DatasetError("label id out of range")
        if self.source_index is None:
            object.__setattr__(self, "source_index", np.arange(len(y)))
        X.setflags(write=False)
        y.setflags(write=False)

    def __len__(self) -> int:
        return self.X.shape[0]

    def sample(self, i: int) -> Sample:
        return Sample(self.X[i].copy(), int(self.y[i]))

    def with_labels(self, y: np.ndarray) -> "Dataset":
        return Dataset(self.schema, self.X, y, self.source_index)


@dataclass(frozen=True)
class PerturbationSpec:
    """Per-dimension freedom of the test input.

    ``kind[i]`` is DIM_FIXED, DIM_BOX, or DIM_FULL.  Box dims carry an
    additive offset interval [lo[i], hi[i]] containing 0.  Full-range dims
    (protected attributes) resolve to the offset interval
    [min_i - x_i, max_i - x_i] once the concrete input is known.
    """

    kind: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    range_lo: np.ndarray
    range_hi: np.ndarray

    def __post_init__(self):
        for name in ("kind", "lo", "hi", "range_lo", "range_hi"):
            v = getattr(self, name)
            object.__setattr__(self, name, np.asarray(v))
        if not (self.kind.shape == self.lo.shape == self.hi.shape):
            raise DatasetError("perturbation spec arrays must share one shape")
        box = self.kind == DIM_BOX
        if np.any(self.lo[box] > 0) or np.any(self.hi[box] < 0):
            raise DatasetError("box offset intervals must contain 0")
        fixed = self.kind == DIM_FIXED
        if np.any(self.lo[fixed] != 0) or np.any(self.hi[fixed] != 0):
            raise DatasetError("fixed dims must have zero offsets")

    @property
    def dims(self) -> int:
        return self.kind.shape[0]

    def resolve(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Concrete offset intervals for input x (resolves full-range dims)."""
        full = self.kind == DIM_FULL
        lo = np.where(full, self.range_lo - x, self.lo)
        hi = np.where(full, self.range_hi - x, self.hi)
        return lo, hi

    def shrink(self, factor: float) -> "PerturbationSpec":
        """Spec with every box interval scaled by ``factor`` in [0, 1]."""
        box = self.kind == DIM_BOX
        return PerturbationSpec(
            self.kind,
            np.where(box, self.lo * factor, self.lo),
            np.where(box, self.hi * factor, self.hi),
            self.range_lo,
            self.range_hi,
        )


def load_schema(path: str | Path) -> Schema:
    """Parse a schema JSON document.

    Expected shape::

        {"attributes": [{"name": ..., "kind": "numerical|categorical|binary",
                         "min": ..., "max": ..., "protected": bool}, ...],
         "label": {"name": ..., "classes": [...]}}
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read schema {path}: {exc}") from exc
    try:
        attrs = tuple(
            AttributeSpec(
                name=str(a["name"]),
                kind=str(a["kind"]),
                lo=float(a["min"]),
                hi=float(a["max"]),
                protected=bool(a.get("protected", False)),
            )
            for a in doc["attributes"]
        )
        label = doc["label"]
        return Schema(attrs, str(label["name"]), tuple(str(c) for c in label["classes"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed schema {path}: {exc}") from exc


def load_dataset(csv_path: str | Path, schema_path: str | Path) -> Dataset:
    """Load and validate a CSV against its schema.

    The header must contain every schema attribute plus the label column
    (order free).  Errors name the offending row and column.
    """
    schema = load_schema(schema_path)
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{csv_path}: empty file") from None
        header = [h.strip() for h in header]
        expected = {a.name for a in schema.attributes} | {schema.label_name}
        if set(header) != expected:
            missing = sorted(expected - set(header))
            extra = sorted(set(header) - expected)
            raise DatasetError(
                f"{csv_path}: header mismatch (missing {missing}, unexpected {extra})"
            )
        col = {name: header.index(name) for name in header}
        class_id = {c: i for i, c in enumerate(schema.classes)}
        rows: list[list[float]] = []
        labels: list[int] = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DatasetError(f"{csv_path}: row {lineno} has {len(rec)} cells")
            vals = []
            for a in schema.attributes:
                cell = rec[col[a.name]].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{csv_path}: row {lineno}, column {a.name!r}: "
                        f"non-numeric value {cell!r}"
                    ) from None
                if not a.lo <= v <= a.hi:
                    raise DatasetError(
                        f"{csv_path}: row {lineno}, column {a.name!r}: "
                        f"value {v} outside range [{a.lo}, {a.hi}]"
                    )
                vals.append(v)
            raw = rec[col[schema.label_name]].strip()
            if raw not in class_id:
                raise DatasetError(
                    f"{csv_path}: row {lineno}, column {schema.label_name!r}: "
                    f"unknown label {raw!r}"
                )
            rows.append(vals)
            labels.append(class_id[raw])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), schema.dims)
    return Dataset(schema, X, np.array(labels, dtype=np.int64))


def preprocess(
    ds: Dataset,
    *,
    scale: bool = False,
    bins: int | None = None,
    balance: bool = False,
    seed: int = 0,
) -> Dataset:
    """Standard-scale numerical attributes, optionally discretize them into
    equal-width bins, and optionally downsample to balanced label counts.

    Scaling maps each numerical attribute to zero mean / unit variance
    (constant columns divide by a 1e-12 floor and come out all zero).
    Binning replaces each numerical attribute by its equal-width bin index
    over the schema range.  Balancing keeps a seeded uniform subsample of
    each label at the minority count; the source_index remap records which
    rows survived.  Schema ranges are updated to the transformed units.
    """
    if bins is not None and bins < 2:
        raise DatasetError(f"bins must be >= 2, got {bins}")
    X = ds.X.copy()
    attrs = list(ds.schema.attributes)
    num = [i for i, a in enumerate(attrs) if a.kind == KIND_NUMERICAL]

    if scale:
        for i in num:
            mu = float(X[:, i].mean()) if len(ds) else 0.0
            sd = float(X[:, i].std()) if len(ds) else 1.0
            sd = max(sd, _VAR_FLOOR)
            X[:, i] = (X[:, i] - mu) / sd
            a = attrs[i]
            attrs[i] = AttributeSpec(
                a.name, a.kind, (a.lo - mu) / sd, (a.hi - mu) / sd, a.protected
            )

    if bins is not None:
        for i in num:
            a = attrs[i]
            width = (a.hi - a.lo) / bins
            if width <= 0:
                X[:, i] = 0.0
            else:
                idx = np.floor((X[:, i] - a.lo) / width)
                X[:, i] = np.clip(idx, 0, bins - 1)
            attrs[i] = AttributeSpec(a.name, a.kind, 0.0, float(bins - 1), a.protected)

    schema = Schema(tuple(attrs), ds.schema.label_name, ds.schema.classes)
    y = ds.y
    src = ds.source_index

    if balance and len(ds):
        counts = np.bincount(y, minlength=schema.n_classes)
        target = int(counts[counts > 0].min())
        rng = np.random.default_rng(seed)
        keep: list[np.ndarray] = []
        for lab in range(schema.n_classes):
            members = np.nonzero(y == lab)[0]
            if members.size > target:
                members = np.sort(rng.choice(members, size=target, replace=False))
            keep.append(members)
        sel = np.sort(np.concatenate(keep))
        X, y, src = X[sel], y[sel], src[sel]

    return Dataset(schema, X, y, src)


def epsilon_spec(ds: Dataset, x: np.ndarray, fraction: float) -> PerturbationSpec:
    """Perturbation spec for input x: numerical unprotected dims get a
    symmetric offset interval of +/- fraction * (max - min), categorical
    and binary unprotected dims stay fixed, protected dims range over
    their whole attribute range."""
    if fraction < 0:
        raise DatasetError(f"fraction must be >= 0, got {fraction}")
    x = np.asarray(x, dtype=np.float64)
    schema = ds.schema
    if x.shape != (schema.dims,):
        raise DatasetError(f"input has shape {x.shape}, schema has {schema.dims} dims")
    kind = np.full(schema.dims, DIM_FIXED, dtype=np.int8)
    lo = np.zeros(schema.dims)
    hi = np.zeros(schema.dims)
    for i, a in enumerate(schema.attributes):
        if a.protected:
            kind[i] = DIM_FULL
        elif a.kind == KIND_NUMERICAL:
            kind[i] = DIM_BOX
            half = fraction * (a.hi - a.lo)
            lo[i], hi[i] = -half, half
    return PerturbationSpec(kind, lo, hi, schema.mins(), schema.maxs())


def fixed_spec(ds: Dataset) -> PerturbationSpec:
    """All-fixed spec: the test input is not perturbed at all."""
    d = ds.schema.dims
    z = np.zeros(d)
    return PerturbationSpec(
        np.full(d, DIM_FIXED, dtype=np.int8), z, z.copy(), ds.schema.mins(), ds.schema.maxs()
    )
