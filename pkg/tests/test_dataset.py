import json

import numpy as np
import pytest

from knncert.dataset import (
    DIM_BOX,
    DIM_FIXED,
    DIM_FULL,
    AttributeSpec,
    Dataset,
    Schema,
    epsilon_spec,
    fixed_spec,
    load_dataset,
    load_schema,
    preprocess,
)
from knncert.errors import DatasetError

from conftest import DATA


def write_pair(tmp_path, rows, schema_doc, name="d"):
    csv_path = tmp_path / f"{name}.csv"
    csv_path.write_text("\n".join(",".join(map(str, r)) for r in rows) + "\n")
    schema_path = tmp_path / f"{name}.json"
    schema_path.write_text(json.dumps(schema_doc))
    return csv_path, schema_path


BASIC_SCHEMA = {
    "attributes": [
        {"name": "a", "kind": "numerical", "min": 0, "max": 10},
        {"name": "b", "kind": "numerical", "min": 0, "max": 10},
    ],
    "label": {"name": "y", "classes": ["0", "1"]},
}


class TestLoad:
    def test_three_row_csv(self, tmp_path):
        rows = [["a", "b", "y"], [1, 2, "0"], [3, 4, "1"], [5, 6, "0"]]
        ds = load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))
        assert len(ds) == 3
        assert ds.schema.dims == 2
        assert ds.y.tolist() == [0, 1, 0]
        assert np.array_equal(ds.X[1], [3.0, 4.0])
        assert ds.source_index.tolist() == [0, 1, 2]

    def test_unknown_label_names_row(self, tmp_path):
        rows = [["a", "b", "y"], [1, 2, "0"], [3, 4, "maybe"]]
        with pytest.raises(DatasetError, match="row 3.*maybe"):
            load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))

    def test_non_numeric_cell_names_column(self, tmp_path):
        rows = [["a", "b", "y"], [1, "oops", "0"]]
        with pytest.raises(DatasetError, match="column 'b'.*oops"):
            load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))

    def test_header_mismatch(self, tmp_path):
        rows = [["a", "c", "y"], [1, 2, "0"]]
        with pytest.raises(DatasetError, match="header mismatch"):
            load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))

    def test_out_of_range_value(self, tmp_path):
        rows = [["a", "b", "y"], [1, 99, "0"]]
        with pytest.raises(DatasetError, match="outside range"):
            load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))

    def test_salary_fixture_shape(self):
        ds = load_dataset(DATA / "salary_train.csv", DATA / "salary_schema.json")
        assert len(ds) == 52
        assert ds.schema.dims == 4
        assert ds.schema.protected_indices == (3,)
        assert ds.schema.n_classes == 2

    def test_column_order_free(self, tmp_path):
        rows = [["y", "b", "a"], ["1", 2, 1]]
        ds = load_dataset(*write_pair(tmp_path, rows, BASIC_SCHEMA))
        assert ds.X[0].tolist() == [1.0, 2.0]
        assert ds.y[0] == 1


class TestSchemaInvariants:
    def test_protected_numerical_rejected(self):
        with pytest.raises(DatasetError, match="protected"):
            Schema(
                (AttributeSpec("a", "numerical", 0, 1, protected=True),),
                "y", ("0", "1"),
            )

    def test_min_above_max_rejected(self):
        with pytest.raises(DatasetError, match="min"):
            Schema((AttributeSpec("a", "numerical", 2, 1),), "y", ("0", "1"))

    def test_single_class_rejected(self):
        with pytest.raises(DatasetError, match="2 label classes"):
            Schema((AttributeSpec("a", "numerical", 0, 1),), "y", ("0",))

    def test_label_out_of_range_rejected(self):
        schema = Schema((AttributeSpec("a", "numerical", 0, 1),), "y", ("0", "1"))
        with pytest.raises(DatasetError, match="label id"):
            Dataset(schema, np.array([[0.5]]), np.array([2]))

    def test_coded_values(self):
        schema = Schema(
            (AttributeSpec("c", "categorical", 0, 3),), "y", ("0", "1")
        )
        assert schema.attribute_values(0).tolist() == [0.0, 1.0, 2.0, 3.0]


class TestPreprocess:
    def make(self, values, labels, kind="numerical"):
        schema = Schema(
            (AttributeSpec("a", kind, float(min(values)), float(max(values))),),
            "y",
            ("0", "1"),
        )
        return Dataset(schema, np.array(values, float).reshape(-1, 1),
                       np.array(labels))

    def test_constant_column_scales_to_zero(self):
        ds = self.make([5.0, 5.0, 5.0], [0, 1, 0])
        out = preprocess(ds, scale=True)
        assert np.allclose(out.X, 0.0)

    def test_scaling_is_idempotent(self, rng):
        ds = self.make(list(rng.uniform(0, 9, size=30)), [0, 1] * 15)
        once = preprocess(ds, scale=True)
        twice = preprocess(once, scale=True)
        assert np.allclose(once.X, twice.X, atol=1e-9)

    def test_equal_width_binning(self):
        schema = Schema(
            (AttributeSpec("a", "numerical", 0.0, 10.0),), "y", ("0", "1")
        )
        ds = Dataset(schema, np.array([[7.3], [0.0], [10.0]]), np.array([0, 1, 0]))
        out = preprocess(ds, bins=5)
        assert out.X[:, 0].tolist() == [3.0, 0.0, 4.0]
        assert out.schema.attributes[0].hi == 4.0

    def test_bins_below_two_rejected(self, rng):
        ds = self.make([1.0, 2.0], [0, 1])
        with pytest.raises(DatasetError, match="bins"):
            preprocess(ds, bins=1)

    def test_balance_downsamples_to_minority(self, rng):
        values = list(rng.uniform(0, 9, size=100))
        labels = [0] * 60 + [1] * 40
        ds = self.make(values, labels)
        out = preprocess(ds, balance=True, seed=3)
        counts = np.bincount(out.y)
        assert counts.tolist() == [40, 40]
        # remap survives and is consistent
        assert np.array_equal(ds.X[out.source_index, 0], out.X[:, 0])

    def test_balance_deterministic_under_seed(self, rng):
        values = list(rng.uniform(0, 9, size=50))
        labels = [0] * 35 + [1] * 15
        ds = self.make(values, labels)
        a = preprocess(ds, balance=True, seed=11)
        b = preprocess(ds, balance=True, seed=11)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_categorical_untouched_by_scale_and_bins(self):
        schema = Schema(
            (
                AttributeSpec("a", "numerical", 0.0, 10.0),
                AttributeSpec("c", "categorical", 0.0, 3.0),
            ),
            "y", ("0", "1"),
        )
        ds = Dataset(schema, np.array([[1.0, 2.0], [9.0, 3.0]]), np.array([0, 1]))
        out = preprocess(ds, scale=True, bins=4)
        assert out.X[:, 1].tolist() == [2.0, 3.0]


class TestEpsilonSpec:
    def test_fraction_zero_collapses_boxes(self, rng):
        from conftest import make_instance

        ds = make_instance(rng, n=10)
        x = ds.X[0]
        spec = epsilon_spec(ds, x, 0.0)
        box = spec.kind == DIM_BOX
        assert np.all(spec.lo[box] == 0) and np.all(spec.hi[box] == 0)

    def test_one_percent_of_range(self):
        schema = Schema(
            (AttributeSpec("a", "numerical", 0.0, 100.0),), "y", ("0", "1")
        )
        ds = Dataset(schema, np.array([[50.0]]), np.array([0]))
        spec = epsilon_spec(ds, np.array([50.0]), 0.01)
        assert spec.lo[0] == -1.0 and spec.hi[0] == 1.0

    def test_binary_unprotected_stays_fixed(self):
        schema = Schema(
            (
                AttributeSpec("a", "numerical", 0.0, 10.0),
                AttributeSpec("b", "binary", 0.0, 1.0),
            ),
            "y", ("0", "1"),
        )
        ds = Dataset(schema, np.array([[1.0, 0.0]]), np.array([0]))
        spec = epsilon_spec(ds, ds.X[0], 0.5)
        assert spec.kind[1] == DIM_FIXED

    def test_protected_flagged_full_range(self, rng):
        from conftest import make_instance

        ds = make_instance(rng, n=10)
        spec = epsilon_spec(ds, ds.X[0], 0.01)
        assert spec.kind[ds.schema.protected_indices[0]] == DIM_FULL
        lo, hi = spec.resolve(ds.X[0])
        j = ds.schema.protected_indices[0]
        assert lo[j] == 0.0 - ds.X[0, j] and hi[j] == 1.0 - ds.X[0, j]

    def test_negative_fraction_rejected(self, rng):
        from conftest import make_instance

        ds = make_instance(rng, n=5)
        with pytest.raises(DatasetError):
            epsilon_spec(ds, ds.X[0], -0.1)

    def test_fixed_spec_all_fixed(self, rng):
        from conftest import make_instance

        ds = make_instance(rng, n=5)
        spec = fixed_spec(ds)
        assert np.all(spec.kind == DIM_FIXED)


def test_load_schema_roundtrip():
    schema = load_schema(DATA / "salary_schema.json")
    assert [a.name for a in schema.attributes] == [
        "age", "education_years", "experience", "gender",
    ]
    assert schema.classes == ("low", "high")
    assert schema.attributes[3].protected
