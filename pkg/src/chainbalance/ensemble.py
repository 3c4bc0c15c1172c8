"""Ensemble trainers: binary-relevance baselines and chain ensembles.

Seven methods share one model shape. BR fits one tree per label on the full
data; BRUS balances each binary set first; EBRUS bags BRUS over bootstrap
rounds. ECC bags plain chains over bootstrap resamples and random label
orders; ECCRU does the same with undersampled chains. ECCRU2 redistributes
the training budget by building more classifiers for rarer labels, producing
nested partial chains, and ECCRU3 adds a lower bound so that full chains are
still built. Predictions are per-label vote fractions, normalized by how
many classifiers actually target each label.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .chain import (
    ChainModel,
    ChainSpec,
    chain_from_dict,
    chain_to_dict,
    predict_chain_batch,
    train_cc,
    train_ccru,
)
from .dataset import MultiLabelDataset, all_label_stats
from .errors import (
    ArityMismatch,
    ConfigError,
    NoTrainableLabels,
    SingleClassLabel,
    ZeroMinorityCount,
)
from .learner import TreeSpec, fit_tree
from .sampling import BinaryDataset, RngStream, bootstrap, random_undersample

METHODS = ("BR", "BRUS", "EBRUS", "ECC", "ECCRU", "ECCRU2", "ECCRU3")
_CHAIN_METHODS = ("ECC", "ECCRU", "ECCRU2", "ECCRU3")

# Substream layout under a per-work-item stream: bootstrap attempts at
# child(0, attempt), chain permutation at child(1), link training at
# child(2). Fixed so parallel and sequential builds are identical.
_BOOT = 0
_PERMUTE = 1
_TRAIN = 2

_MAX_BOOTSTRAP_ATTEMPTS = 1000

MODEL_SCHEMA = "chainbalance.model.v1"


@dataclass(frozen=True)
class EnsembleSpec:
    """Training configuration for any of the seven methods."""

    method: str
    c: int = 10
    theta_max: float = 10.0
    theta_min: float | None = None
    tree: TreeSpec = field(default_factory=TreeSpec)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; valid: {METHODS}")
        if self.c < 1:
            raise ConfigError("ensemble size c must be >= 1")
        if self.theta_max < 1.0:
            raise ConfigError("theta_max must be >= 1 (budget cap below c)")
        if self.theta_min is not None:
            if self.method != "ECCRU3":
                raise ConfigError("theta_min applies only to ECCRU3")
            if not (1.0 / self.c) <= self.theta_min <= 1.0:
                raise ConfigError("theta_min must lie in [1/c, 1]")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def effective_theta_min(self) -> float:
        if self.method != "ECCRU3":
            raise ConfigError("theta_min applies only to ECCRU3")
        return 0.5 if self.theta_min is None else self.theta_min


@dataclass(frozen=True)
class ClassifierBudget:
    """Per-label classifier counts allocated inversely to minority counts."""

    targets: tuple[int, ...]
    raw: tuple[int, ...]
    total_minority: int


@dataclass(frozen=True)
class EnsembleModel:
    """Chains plus per-label vote counters and constant fallbacks.

    vote_counts[k] is the number of fitted binary classifiers whose target is
    label k; it normalizes the vote sums at prediction time. Labels that were
    single-class at training time are served by their constant class.
    """

    method: str
    chains: tuple[ChainModel, ...]
    vote_counts: np.ndarray
    q: int
    base_arity: int
    skipped_labels: dict[int, int]

    def __post_init__(self) -> None:
        counts = np.asarray(self.vote_counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "vote_counts", counts)


def _int_floor(value: float) -> int:
    return int(math.floor(value + 1e-9))


def _int_ceil(value: float) -> int:
    return int(math.ceil(value - 1e-9))


def compute_classifier_budget(
    minority_counts: list[int] | tuple[int, ...] | np.ndarray,
    spec: EnsembleSpec,
) -> ClassifierBudget:
    """Allocate per-label classifier counts from minority counts.

    The raw count for label j is floor(c * sum(m) / (q * m_j)), so labels
    with fewer minority examples get more classifiers at the same total row
    budget. ECCRU2 caps counts at c*theta_max (and lifts zeros to one);
    ECCRU3 also raises them to at least c*theta_min. Other methods get the
    raw counts.
    """
    counts = [int(m) for m in minority_counts]
    if not counts:
        raise ZeroMinorityCount("no labels given")
    if any(m <= 0 for m in counts):
        raise ZeroMinorityCount("minority counts must all be positive")
    q = len(counts)
    total = sum(counts)
    raw = tuple((spec.c * total) // (q * m) for m in counts)
    if spec.method == "ECCRU2":
        cap = _int_floor(spec.c * spec.theta_max)
        targets = tuple(min(max(r, 1), cap) for r in raw)
    elif spec.method == "ECCRU3":
        cap = _int_floor(spec.c * spec.theta_max)
        floor_ = _int_ceil(spec.c * spec.effective_theta_min)
        targets = tuple(min(max(r, floor_), cap) for r in raw)
    else:
        targets = raw
    return ClassifierBudget(targets=targets, raw=raw, total_minority=total)


def chain_label_sets(targets: list[int] | tuple[int, ...], max_rounds: int) -> list[list[int]]:
    """Nested label subsets for the partial-chain build.

    Each round collects the labels whose remaining counter is positive and
    decrements them; building stops after max_rounds rounds or as soon as
    fewer than two labels remain. Entries are positions into the targets
    list, in ascending order.
    """
    counters = [int(t) for t in targets]
    rounds: list[list[int]] = []
    for _ in range(max_rounds):
        selected = [j for j, cn in enumerate(counters) if cn > 0]
        for j in selected:
            counters[j] -= 1
        if len(selected) < 2:
            break
        rounds.append(selected)
    return rounds


def _actual_counts(targets: tuple[int, ...], max_rounds: int) -> list[int]:
    counts = [0] * len(targets)
    for labels in chain_label_sets(targets, max_rounds):
        for j in labels:
            counts[j] += 1
    return counts


def _bootstrap_with_classes(
    ds: MultiLabelDataset,
    stream: RngStream,
    required_labels: tuple[int, ...],
) -> MultiLabelDataset:
    """Bootstrap resample; redraw until every required label keeps both classes."""
    for attempt in range(_MAX_BOOTSTRAP_ATTEMPTS):
        sample = bootstrap(ds, stream.child(attempt))
        ok = True
        for j in required_labels:
            total = int(sample.labels[:, j].sum())
            if total == 0 or total == sample.n:
                ok = False
                break
        if ok:
            return sample
    raise SingleClassLabel(
        "could not draw a bootstrap sample keeping both classes for all "
        f"chained labels after {_MAX_BOOTSTRAP_ATTEMPTS} attempts"
    )


def _permute(labels: list[int], stream: RngStream) -> ChainSpec:
    gen = stream.generator()
    order = gen.permutation(len(labels))
    return ChainSpec(tuple(labels[i] for i in order))


def _single_link_model(ds: MultiLabelDataset, label: int, tree: TreeSpec) -> ChainModel:
    bd = BinaryDataset(ds.features, ds.labels[:, label])
    model = fit_tree(bd, tree)
    return ChainModel(
        links=((label, model),),
        base_arity=ds.d,
        fit_class_counts=((bd.positive_count, bd.negative_count),),
    )


def _single_link_undersampled(
    ds: MultiLabelDataset, label: int, tree: TreeSpec, stream: RngStream
) -> ChainModel:
    bd = BinaryDataset(ds.features, ds.labels[:, label])
    balanced = random_undersample(bd, stream)
    model = fit_tree(balanced, tree)
    return ChainModel(
        links=((label, model),),
        base_arity=ds.d,
        fit_class_counts=((balanced.positive_count, balanced.negative_count),),
    )


def _run_tasks(tasks: list[Callable[[], list[ChainModel]]], n_jobs: int) -> list[ChainModel]:
    if n_jobs == 1 or len(tasks) <= 1:
        results = [task() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda t: t(), tasks))
    return [model for group in results for model in group]


def train_ensemble(
    ds: MultiLabelDataset, spec: EnsembleSpec, n_jobs: int = 1
) -> EnsembleModel:
    """Train the configured method on a dataset.

    Single-class labels are excluded from every chain and served by constant
    predictions. Work items (chains, or per-label fits) may run concurrently;
    each derives its own substream from (seed, item index), so the result is
    independent of n_jobs.
    """
    stats = all_label_stats(ds)
    skipped = {
        s.label_index: int(ds.labels[0, s.label_index])
        for s in stats
        if s.minority_count == 0
    }
    eligible = [s.label_index for s in stats if s.minority_count > 0]
    if not eligible:
        raise NoTrainableLabels("every label is single-class")
    root = RngStream(spec.seed)
    tree = spec.tree
    tasks: list[Callable[[], list[ChainModel]]] = []

    method = spec.method
    if method in ("ECCRU2", "ECCRU3") and len(eligible) < 2:
        # Partial chains need at least two labels per round; degrade to the
        # uniform-chain build.
        method = "ECCRU"

    if method == "BR":
        for label in eligible:
            tasks.append(lambda label=label: [_single_link_model(ds, label, tree)])
    elif method == "BRUS":
        for idx, label in enumerate(eligible):
            stream = root.child(idx).child(_BOOT)
            tasks.append(
                lambda label=label, stream=stream: [
                    _single_link_undersampled(ds, label, tree, stream)
                ]
            )
    elif method == "EBRUS":
        for i in range(spec.c):
            round_stream = root.child(i)

            def build_round(round_stream=round_stream) -> list[ChainModel]:
                sample = _bootstrap_with_classes(
                    ds, round_stream.child(_BOOT), tuple(eligible)
                )
                return [
                    _single_link_undersampled(
                        sample, label, tree, round_stream.child(_TRAIN, j)
                    )
                    for j, label in enumerate(eligible)
                ]

            tasks.append(build_round)
    elif method in ("ECC", "ECCRU"):
        for i in range(spec.c):
            chain_stream = root.child(i)

            def build_chain(chain_stream=chain_stream, method=method) -> list[ChainModel]:
                if method == "ECC":
                    sample = bootstrap(ds, chain_stream.child(_BOOT, 0))
                else:
                    sample = _bootstrap_with_classes(
                        ds, chain_stream.child(_BOOT), tuple(eligible)
                    )
                order = _permute(eligible, chain_stream.child(_PERMUTE))
                trainer = train_cc if method == "ECC" else train_ccru
                return [trainer(sample, order, tree, chain_stream.child(_TRAIN))]

            tasks.append(build_chain)
    else:  # ECCRU2 / ECCRU3
        budget = compute_classifier_budget(
            [stats[j].minority_count for j in eligible], spec
        )
        rounds = chain_label_sets(budget.targets, _int_floor(spec.c * spec.theta_max))
        for i, positions in enumerate(rounds):
            chain_stream = root.child(i)
            labels = [eligible[p] for p in positions]

            def build_partial(chain_stream=chain_stream, labels=tuple(labels)) -> list[ChainModel]:
                sample = _bootstrap_with_classes(
                    ds, chain_stream.child(_BOOT), labels
                )
                order = _permute(list(labels), chain_stream.child(_PERMUTE))
                return [train_ccru(sample, order, tree, chain_stream.child(_TRAIN))]

            tasks.append(build_partial)

    chains = _run_tasks(tasks, n_jobs)
    vote_counts = np.zeros(ds.q, dtype=np.int64)
    for chain in chains:
        for label, _ in chain.links:
            vote_counts[label] += 1
    return EnsembleModel(
        method=spec.method,
        chains=tuple(chains),
        vote_counts=vote_counts,
        q=ds.q,
        base_arity=ds.d,
        skipped_labels=skipped,
    )


def predict_relevance_batch(model: EnsembleModel, X: np.ndarray) -> np.ndarray:
    """Per-label relevance degrees in [0, 1] for every row of X.

    Each label's score is its positive votes divided by the number of
    classifiers that target it; constant labels yield 0.0 or 1.0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.base_arity:
        raise ArityMismatch(
            f"expected {model.base_arity} features, got shape {X.shape}"
        )
    votes = np.zeros((X.shape[0], model.q), dtype=np.float64)
    for chain in model.chains:
        for label, preds in predict_chain_batch(chain, X):
            votes[:, label] += preds
    counted = model.vote_counts > 0
    votes[:, counted] /= model.vote_counts[counted]
    for label, constant in model.skipped_labels.items():
        votes[:, label] = float(constant)
    return votes


def predict_relevance(model: EnsembleModel, x: np.ndarray) -> np.ndarray:
    """Relevance degrees for a single feature vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.base_arity:
        raise ArityMismatch(
            f"expected {model.base_arity} features, got {x.shape[0]}"
        )
    return predict_relevance_batch(model, x[None, :])[0]


def instance_budget(ds: MultiLabelDataset, spec: EnsembleSpec) -> int:
    """Total training rows consumed by all classifier fits for this spec.

    Balanced fits consume 2*m_j rows each. For the partial-chain methods the
    count uses the classifiers actually built per label; with fewer than two
    trainable labels those methods degrade to the uniform build and the
    uniform budget is reported.
    """
    stats = all_label_stats(ds)
    minority = [s.minority_count for s in stats if s.minority_count > 0]
    if not minority:
        raise NoTrainableLabels("every label is single-class")
    q = len(minority)
    if spec.method == "BR":
        return q * ds.n
    if spec.method == "ECC":
        return spec.c * q * ds.n
    if spec.method == "BRUS":
        return sum(2 * m for m in minority)
    if spec.method in ("EBRUS", "ECCRU"):
        return spec.c * sum(2 * m for m in minority)
    if q < 2:
        return spec.c * sum(2 * m for m in minority)
    budget = compute_classifier_budget(minority, spec)
    actual = _actual_counts(budget.targets, _int_floor(spec.c * spec.theta_max))
    return sum(a * 2 * m for a, m in zip(actual, minority))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def ensemble_to_dict(model: EnsembleModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "method": model.method,
        "q": model.q,
        "base_arity": model.base_arity,
        "vote_counts": model.vote_counts.tolist(),
        "skipped_labels": {str(k): v for k, v in model.skipped_labels.items()},
        "chains": [chain_to_dict(chain) for chain in model.chains],
    }


def ensemble_from_dict(payload: dict) -> EnsembleModel:
    if payload.get("schema") != MODEL_SCHEMA:
        raise ConfigError(f"unsupported model schema {payload.get('schema')!r}")
    return EnsembleModel(
        method=payload["method"],
        chains=tuple(chain_from_dict(c) for c in payload["chains"]),
        vote_counts=np.array(payload["vote_counts"], dtype=np.int64),
        q=int(payload["q"]),
        base_arity=int(payload["base_arity"]),
        skipped_labels={int(k): int(v) for k, v in payload["skipped_labels"].items()},
    )


def save_model(model: EnsembleModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ensemble_to_dict(model), sort_keys=True))


def load_model(path: str | Path) -> EnsembleModel:
    return ensemble_from_dict(json.loads(Path(path).read_text()))
