"""Cross-validated experiment runner.

Repeats a stratified k-fold split, trains every configured method on each
training half, picks per-label thresholds on that same half, and evaluates
the five metrics on the held-out half. Metric output is fully deterministic
for a fixed config and seed; wall times go to a separate file so the metric
payload stays byte-stable.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    MultiLabelDataset,
    load_mulan_files,
    reduce_features_by_frequency,
)
from .ensemble import (
    METHODS,
    EnsembleSpec,
    instance_budget,
    predict_relevance_batch,
    train_ensemble,
)
from .errors import ConfigError
from .learner import TreeSpec
from .metrics import METRIC_KEYS, build_report, report_to_dict
from .sampling import RngStream, derive_seed, iterative_stratified_kfold

RESULTS_SCHEMA = "chainbalance.cv.v1"

# Substream tags under the master seed.
_FOLD_SPLIT = 0
_METHOD_SEED = 1


@dataclass(frozen=True)
class ExperimentConfig:
    arff_path: Path
    xml_path: Path
    out_dir: Path
    methods: tuple[str, ...]
    c: int = 10
    theta_max: float = 10.0
    theta_min: float | None = None
    tree: TreeSpec = field(default_factory=TreeSpec)
    repeats: int = 5
    folds: int = 2
    feature_keep_fraction: float | None = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if not self.methods:
            raise ConfigError("at least one method is required")
        for name in self.methods:
            if name not in METHODS:
                raise ConfigError(f"unknown method {name!r}; valid: {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method names")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.theta_min is not None and "ECCRU3" not in self.methods:
            raise ConfigError("theta_min applies only to ECCRU3")
        if self.feature_keep_fraction is not None and not (
            0.0 < self.feature_keep_fraction <= 1.0
        ):
            raise ConfigError("feature_keep_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def ensemble_spec(self, method: str, seed: int) -> EnsembleSpec:
        return EnsembleSpec(
            method=method,
            c=self.c,
            theta_max=self.theta_max,
            theta_min=self.theta_min if method == "ECCRU3" else None,
            tree=self.tree,
            seed=seed,
        )


def _mean_or_none(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def _macro_means(reports: list[dict]) -> dict[str, float | None]:
    return {
        key: _mean_or_none([r["macro"][key] for r in reports]) for key in METRIC_KEYS
    }


def _per_label_means(reports: list[dict]) -> list[dict]:
    if not reports:
        return []
    q = len(reports[0]["per_label"])
    rows = []
    for j in range(q):
        row: dict = {"label_index": j}
        for key in METRIC_KEYS:
            row[key] = _mean_or_none([r["per_label"][j][key] for r in reports])
        rows.append(row)
    return rows


def run_cv(config: ExperimentConfig) -> dict:
    """Run the experiment and write result files into config.out_dir.

    Writes cv_results.json (deterministic), per_label.csv, and timings.json.
    Returns the cv_results payload.
    """
    ds = load_mulan_files(config.arff_path, config.xml_path)
    if config.feature_keep_fraction is not None:
        ds = reduce_features_by_frequency(ds, config.feature_keep_fraction)

    master = RngStream(config.seed)
    method_records: dict[str, dict] = {
        m: {"folds": [], "timings": []} for m in config.methods
    }

    for repeat in range(config.repeats):
        folds = iterative_stratified_kfold(
            ds, config.folds, master.child(_FOLD_SPLIT, repeat)
        )
        for fold_idx in range(config.folds):
            test_rows = folds[fold_idx]
            train_rows = np.concatenate(
                [folds[i] for i in range(config.folds) if i != fold_idx]
            )
            train_ds = ds.take_rows(np.sort(train_rows))
            test_ds = ds.take_rows(test_rows)
            for method_idx, method in enumerate(config.methods):
                seed = derive_seed(
                    config.seed, _METHOD_SEED, repeat, fold_idx, method_idx
                )
                spec = config.ensemble_spec(method, seed)
                started = time.perf_counter()
                model = train_ensemble(train_ds, spec, n_jobs=config.n_jobs)
                elapsed = time.perf_counter() - started
                train_scores = predict_relevance_batch(model, train_ds.features)
                test_scores = predict_relevance_batch(model, test_ds.features)
                report = build_report(
                    train_scores,
                    train_ds.labels,
                    test_scores,
                    test_ds.labels,
                    skipped_label_count=len(model.skipped_labels),
                )
                method_records[method]["folds"].append(
                    {
                        "repeat": repeat,
                        "fold": fold_idx,
                        "train_rows": int(train_ds.n),
                        "test_rows": int(test_ds.n),
                        "instance_budget": instance_budget(train_ds, spec),
                        "classifier_counts": model.vote_counts.tolist(),
                        "report": report_to_dict(report),
                    }
                )
                method_records[method]["timings"].append(
                    {"repeat": repeat, "fold": fold_idx, "train_seconds": elapsed}
                )

    methods_payload = {}
    for method in config.methods:
        fold_records = method_records[method]["folds"]
        reports = [rec["report"] for rec in fold_records]
        repeat_means = []
        for repeat in range(config.repeats):
            subset = [
                rec["report"] for rec in fold_records if rec["repeat"] == repeat
            ]
            repeat_means.append(
                {
                    "repeat": repeat,
                    "macro": _macro_means(subset),
                    "per_label": _per_label_means(subset),
                }
            )
        methods_payload[method] = {
            "folds": fold_records,
            "repeat_means": repeat_means,
            "overall": {
                "macro": _macro_means(reports),
                "per_label": _per_label_means(reports),
            },
            "instance_budget_mean": _mean_or_none(
                [float(rec["instance_budget"]) for rec in fold_records]
            ),
        }

    payload = {
        "schema": RESULTS_SCHEMA,
        "config": {
            "arff": str(config.arff_path),
            "xml": str(config.xml_path),
            "methods": list(config.methods),
            "c": config.c,
            "theta_max": config.theta_max,
            "theta_min": config.theta_min,
            "tree": {
                "max_depth": config.tree.max_depth,
                "min_samples_leaf": config.tree.min_samples_leaf,
            },
            "repeats": config.repeats,
            "folds": config.folds,
            "feature_keep_fraction": config.feature_keep_fraction,
            "seed": config.seed,
        },
        "dataset": {"n": ds.n, "d": ds.d, "q": ds.q, "relation": ds.relation},
        "methods": methods_payload,
    }

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "cv_results.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    timings = {
        "methods": {m: method_records[m]["timings"] for m in config.methods}
    }
    (out_dir / "timings.json").write_text(json.dumps(timings, indent=2) + "\n")
    _write_per_label_csv(out_dir / "per_label.csv", config.methods, method_records)
    return payload


def _write_per_label_csv(
    path: Path, methods: tuple[str, ...], method_records: dict[str, dict]
) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["method", "repeat", "fold", "label_index", "metric", "value"])
        for method in methods:
            for rec in method_records[method]["folds"]:
                for row in rec["report"]["per_label"]:
                    for key in METRIC_KEYS:
                        writer.writerow(
                            [
                                method,
                                rec["repeat"],
                                rec["fold"],
                                row["label_index"],
                                key,
                                "" if row[key] is None else row[key],
                            ]
                        )


def collect_rank_matrix(
    result_paths: list[Path], metric: str
) -> tuple[list[str], list[str], np.ndarray]:
    """Build a methods x datasets matrix of overall macro values.

    Every results file must contain the same method set. Returns (methods,
    dataset names, matrix).
    """
    if not result_paths:
        raise ConfigError("no result files given")
    if metric not in METRIC_KEYS:
        raise ConfigError(f"unknown metric {metric!r}; valid: {METRIC_KEYS}")
    methods: list[str] | None = None
    names = []
    columns = []
    for path in result_paths:
        payload = json.loads(Path(path).read_text())
        if payload.get("schema") != RESULTS_SCHEMA:
            raise ConfigError(f"{path}: unsupported results schema")
        file_methods = sorted(payload["methods"].keys())
        if methods is None:
            methods = file_methods
        elif methods != file_methods:
            raise ConfigError(f"{path}: method set differs from earlier files")
        names.append(payload["dataset"].get("relation") or Path(path).stem)
        column = []
        for m in methods:
            value = payload["methods"][m]["overall"]["macro"][metric]
            if value is None:
                raise ConfigError(f"{path}: macro {metric} undefined for {m}")
            column.append(value)
        columns.append(column)
    assert methods is not None
    matrix = np.array(columns, dtype=np.float64).T
    if len(methods) < 2:
        raise ConfigError("ranking needs at least two methods")
    return methods, names, matrix
