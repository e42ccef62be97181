"""Certification of KNN classification fairness under input perturbation
and bounded training-label bias, with an enumeration oracle for ground
truth at small scale."""

__version__ = "0.1.0"

from .bounds import DistanceBound, dim_bound, distance_bound, over_nn
from .dataset import (
    AttributeSpec,
    Dataset,
    PerturbationSpec,
    Sample,
    Schema,
    epsilon_spec,
    fixed_spec,
    load_dataset,
    load_schema,
    preprocess,
)
from .errors import ConfigError, DatasetError, OracleCapError, SoundnessError
from .harness import Certificate, RunConfig, certify_batch, oracle_compare
from .knn import (
    FoldPartition,
    distance,
    freq_label,
    k_nearest,
    knn_learn,
    knn_predict,
    make_folds,
)
from .learn_cert import (
    ErrorBounds,
    KSet,
    abs_knn_learn,
    abs_may_err,
    abs_must_err,
    flip_feasible,
    kset_from_bounds,
    necessary_conditions,
)
from .oracle import enum_clean_sets, oracle_fair, sample_falsify_epsilon
from .predict_cert import abs_predict_same, abs_same_label

__all__ = [
    "AttributeSpec",
    "Certificate",
    "ConfigError",
    "Dataset",
    "DatasetError",
    "DistanceBound",
    "ErrorBounds",
    "FoldPartition",
    "KSet",
    "OracleCapError",
    "PerturbationSpec",
    "RunConfig",
    "Sample",
    "Schema",
    "SoundnessError",
    "abs_knn_learn",
    "abs_may_err",
    "abs_must_err",
    "abs_predict_same",
    "abs_same_label",
    "certify_batch",
    "dim_bound",
    "distance",
    "distance_bound",
    "enum_clean_sets",
    "epsilon_spec",
    "fixed_spec",
    "flip_feasible",
    "freq_label",
    "k_nearest",
    "knn_learn",
    "knn_predict",
    "kset_from_bounds",
    "load_dataset",
    "load_schema",
    "make_folds",
    "necessary_conditions",
    "oracle_compare",
    "oracle_fair",
    "over_nn",
    "preprocess",
    "sample_falsify_epsilon",
]
