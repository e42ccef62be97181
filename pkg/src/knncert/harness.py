"""Batch certification driver and experiment harness.

Runs the concrete baseline, computes KSet once per batch (it does not
depend on the test input), certifies each test input against every K in
KSet, and emits a per-input CSV plus a JSON summary carrying the full
configuration.  The oracle-compare mode re-checks outcomes against the
enumeration oracle and reports accuracy and speedup.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .bounds import bound_sums, over_nn_from_bounds
from .dataset import Dataset, epsilon_spec, fixed_spec, load_dataset
from .errors import ConfigError, OracleCapError
from .knn import DEFAULT_GRID, DEFAULT_P, knn_learn, knn_predict, validate_grid
from .learn_cert import abs_knn_learn
from .oracle import DEFAULT_CAP, oracle_fair, sample_falsify_epsilon
from .predict_cert import abs_same_label

VARIANT_NAMES = {
    "flip": "label_flip",
    "individual": "label_flip+individual",
    "epsilon": "label_flip+epsilon",
}

OUTCOME_CERTIFIED = "certified"
OUTCOME_UNKNOWN = "unknown"
OUTCOME_ERROR = "error"


@dataclass(frozen=True)
class Certificate:
    index: int
    variant: str
    baseline_pred: int
    outcome: str
    kset: tuple[int, ...]
    seconds: float


@dataclass
class RunConfig:
    train: str
    test: str
    schema: str
    out: str
    epsilon_frac: float = 0.01
    n_flips: int = 0
    p: int = DEFAULT_P
    grid: tuple[int, ...] = DEFAULT_GRID
    seed: int = 0
    metric: str = "euclidean"
    variant: str = "flip"
    group_by: tuple[str, ...] = ()
    jobs: int = 0
    oracle_cap: int = DEFAULT_CAP
    oracle_relearn: bool = True
    falsify_samples: int = 200

    def resolved_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def _validate(cfg: RunConfig) -> None:
    for name in ("train", "test", "schema"):
        path = getattr(cfg, name)
        if not Path(path).is_file():
            raise ConfigError(f"{name} file not found: {path}")
    if cfg.epsilon_frac < 0:
        raise ConfigError(f"epsilon fraction must be >= 0, got {cfg.epsilon_frac}")
    if cfg.n_flips < 0:
        raise ConfigError(f"n-flips must be >= 0, got {cfg.n_flips}")
    if cfg.variant not in VARIANT_NAMES:
        raise ConfigError(f"variant must be one of {sorted(VARIANT_NAMES)}")
    if cfg.metric != "euclidean":
        raise ConfigError(
            "certification bounds support the Euclidean metric only "
            f"(got {cfg.metric!r}); Manhattan is available in the library "
            "for concrete prediction"
        )
    if cfg.p < 2:
        raise ConfigError(f"p must be >= 2, got {cfg.p}")


def _build_spec(cfg: RunConfig, train: Dataset, x: np.ndarray):
    if cfg.variant == "flip":
        return fixed_spec(train)
    if cfg.variant == "individual":
        return epsilon_spec(train, x, 0.0)
    return epsilon_spec(train, x, cfg.epsilon_frac)


def _certify_one(train: Dataset, kset, n: int, x: np.ndarray, y: int, spec) -> tuple[str, float]:
    t0 = time.perf_counter()
    lb2, ub2 = bound_sums(train, x, spec)
    ok = True
    for k in kset:
        members = over_nn_from_bounds(lb2, ub2, k)
        if not abs_same_label(members, k, n, y, train.y, train.schema.n_classes):
            ok = False
            break
    return (OUTCOME_CERTIFIED if ok else OUTCOME_UNKNOWN), time.perf_counter() - t0


def _group_report(test: Dataset, rows: list[Certificate], group_by) -> dict:
    name_to_idx = {a.name: i for i, a in enumerate(test.schema.attributes)}
    for name in group_by:
        if name not in name_to_idx:
            raise ConfigError(f"group-by attribute {name!r} not in schema")
    cells: dict[tuple, list[int]] = {}
    marginals: dict[str, dict[str, list[int]]] = {name: {} for name in group_by}
    for row in rows:
        cert = 1 if row.outcome == OUTCOME_CERTIFIED else 0
        key = tuple(f"{test.X[row.index, name_to_idx[g]]:g}" for g in group_by)
        cell = cells.setdefault(key, [0, 0])
        cell[0] += 1
        cell[1] += cert
        for g, v in zip(group_by, key):
            m = marginals[g].setdefault(v, [0, 0])
            m[0] += 1
            m[1] += cert
    def pct(c):
        return 100.0 * c[1] / c[0] if c[0] else 0.0
    return {
        "cells": [
            {"key": dict(zip(group_by, key)), "count": c[0], "certified": c[1],
             "certified_pct": pct(c)}
            for key, c in sorted(cells.items())
        ],
        "marginals": {
            g: {v: {"count": c[0], "certified": c[1], "certified_pct": pct(c)}
                for v, c in sorted(vals.items())}
            for g, vals in marginals.items()
        },
    }


def _summary(cfg: RunConfig, rows: list[Certificate], kset, kset_seconds: float,
             test: Dataset) -> dict:
    counted = [r for r in rows if r.outcome != OUTCOME_ERROR]
    certified = sum(1 for r in rows if r.outcome == OUTCOME_CERTIFIED)
    summary = {
        "config": {**asdict(cfg), "backend": BACKEND, "version": __version__},
        "variant": VARIANT_NAMES[cfg.variant],
        "n_inputs": len(rows),
        "n_errors": len(rows) - len(counted),
        "certified": certified,
        "certified_pct": 100.0 * certified / len(counted) if counted else 0.0,
        "kset": list(kset.ks),
        "kset_min_ub": kset.min_ub,
        "kset_bounds": {str(k): [lb, ub] for k, lb, ub
                        in zip(kset.grid, kset.lower, kset.upper)},
        "kset_seconds": kset_seconds,
        "mean_abstract_seconds": (
            float(np.mean([r.seconds for r in counted])) if counted else 0.0
        ),
    }
    if cfg.group_by:
        summary["groups"] = _group_report(test, rows, cfg.group_by)
    return summary


def _write_reports(out_dir: str, rows: list[Certificate], summary: dict,
                   prefix: str = "certificates") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{prefix}.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "variant", "baseline_pred", "outcome", "kset", "seconds"])
        for r in rows:
            w.writerow([r.index, r.variant, r.baseline_pred, r.outcome,
                        "|".join(map(str, r.kset)), f"{r.seconds:.6f}"])
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def certify_batch(cfg: RunConfig, write: bool = True) -> dict:
    """Certify every test input; returns the summary (rows included under
    the "_rows" key for programmatic use)."""
    _validate(cfg)
    train = load_dataset(cfg.train, cfg.schema)
    test = load_dataset(cfg.test, cfg.schema)
    if cfg.n_flips > len(train):
        raise ConfigError(f"n-flips {cfg.n_flips} exceeds |T| = {len(train)}")
    grid = validate_grid(cfg.grid, len(train), cfg.p)
    jobs = cfg.resolved_jobs()

    k_base = knn_learn(train, cfg.p, grid, cfg.seed)
    t0 = time.perf_counter()
    kset = abs_knn_learn(train, cfg.n_flips, cfg.p, grid, cfg.seed, jobs=jobs)
    kset_seconds = time.perf_counter() - t0

    variant_name = VARIANT_NAMES[cfg.variant]

    def run(i: int) -> Certificate:
        x = test.X[i]
        try:
            y = knn_predict(train, k_base, x)
            spec = _build_spec(cfg, train, x)
            outcome, seconds = _certify_one(train, kset, cfg.n_flips, x, y, spec)
            return Certificate(i, variant_name, y, outcome, kset.ks, seconds)
        except Exception:
            return Certificate(i, variant_name, -1, OUTCOME_ERROR, (), 0.0)

    if jobs > 1 and len(test) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run, range(len(test))))
    else:
        rows = [run(i) for i in range(len(test))]

    summary = _summary(cfg, rows, kset, kset_seconds, test)
    if write:
        _write_reports(cfg.out, rows, summary)
    summary["_rows"] = rows
    summary["_baseline_k"] = k_base
    return summary


def oracle_compare(cfg: RunConfig, write: bool = True) -> dict:
    """Certify, then re-check against ground truth.

    For the flip and individual variants the enumeration oracle provides
    ground truth (within the cap); for the epsilon variant only sampled
    falsification is possible.  Any certified-but-unfair input is a
    soundness violation and is reported as such.
    """
    summary = certify_batch(cfg, write=False)
    rows: list[Certificate] = summary.pop("_rows")
    k_base: int = summary.pop("_baseline_k")
    train = load_dataset(cfg.train, cfg.schema)
    test = load_dataset(cfg.test, cfg.schema)
    grid = validate_grid(cfg.grid, len(train), cfg.p)

    violations: list[int] = []
    oracle_rows = []
    gt_fair = 0
    gt_known = 0
    speedups = []
    cap_hit = False
    variant_name = VARIANT_NAMES[cfg.variant]

    for row in rows:
        x = test.X[row.index]
        entry = {"index": row.index, "outcome": row.outcome, "oracle": "unavailable"}
        if row.outcome != OUTCOME_ERROR and cfg.variant in ("flip", "individual"):
            try:
                t0 = time.perf_counter()
                fair = oracle_fair(
                    train, cfg.n_flips, x, row.baseline_pred,
                    variant=variant_name,
                    k_policy="relearn" if cfg.oracle_relearn else "fixed",
                    K=k_base, p=cfg.p, grid=grid, seed=cfg.seed,
                    cap=cfg.oracle_cap,
                )
                oracle_seconds = time.perf_counter() - t0
                gt_known += 1
                gt_fair += int(fair)
                entry["oracle"] = "fair" if fair else "unfair"
                entry["oracle_seconds"] = oracle_seconds
                if row.seconds > 0:
                    speedups.append(oracle_seconds / row.seconds)
                if row.outcome == OUTCOME_CERTIFIED and not fair:
                    violations.append(row.index)
            except OracleCapError:
                cap_hit = True
        elif row.outcome == OUTCOME_CERTIFIED and cfg.variant == "epsilon":
            spec = _build_spec(cfg, train, x)
            try:
                cx = sample_falsify_epsilon(
                    train, cfg.n_flips, k_base, x, row.baseline_pred, spec,
                    cfg.falsify_samples, cfg.seed, cap=cfg.oracle_cap,
                )
            except OracleCapError:
                cap_hit = True
                cx = None
            entry["oracle"] = "falsified" if cx is not None else "sampled-ok"
            if cx is not None:
                violations.append(row.index)
        oracle_rows.append(entry)

    summary["oracle"] = {
        "cap": cfg.oracle_cap,
        "cap_exceeded": cap_hit,
        "relearn": cfg.oracle_relearn,
        "ground_truth_known": gt_known,
        "ground_truth_fair": gt_fair,
        "ground_truth_pct": 100.0 * gt_fair / gt_known if gt_known else None,
        "accuracy_pct": (
            100.0 * summary["certified"] / gt_fair if gt_fair else None
        ),
        "mean_speedup": float(np.mean(speedups)) if speedups else None,
        "soundness_violations": violations,
        "rows": oracle_rows,
    }
    if write:
        _write_reports(cfg.out, rows, summary)
    summary["_rows"] = rows
    return summary
