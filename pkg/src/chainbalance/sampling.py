"""Seeded resampling primitives: substreams, bootstrap, undersampling, folds.

Every random operation takes an RngStream, a (master seed, path) pair that
deterministically identifies an independent substream. Work items derive
their own child streams, so parallel and sequential execution draw identical
random sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import MultiLabelDataset
from .errors import SingleClassInput


@dataclass(frozen=True)
class RngStream:
    """A reproducible random substream identified by (master_seed, path).

    Identical pairs yield identical sequences; distinct paths yield
    statistically independent streams (numpy SeedSequence spawn keys).
    """

    master_seed: int
    path: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if any(p < 0 for p in self.path):
            raise ValueError("path entries must be non-negative")
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *steps: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(int(s) for s in steps))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed: int, *path: int) -> int:
    """A 64-bit seed derived from a master seed and a path, stable across runs."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    words = seq.generate_state(2, dtype=np.uint32)
    return int(words[0]) << 32 | int(words[1])


@dataclass(frozen=True)
class BinaryDataset:
    """Feature matrix plus a single binary target column."""

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        targs = np.asarray(self.targets, dtype=np.int8)
        if feats.ndim != 2 or targs.ndim != 1:
            raise ValueError("features must be 2-D and targets 1-D")
        if feats.shape[0] != targs.shape[0]:
            raise ValueError("features and targets disagree on row count")
        if not np.isin(targs, (0, 1)).all():
            raise ValueError("targets must be 0/1")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)

    @property
    def n(self) -> int:
        return self.targets.shape[0]

    @property
    def positive_count(self) -> int:
        return int(self.targets.sum())

    @property
    def negative_count(self) -> int:
        return self.n - self.positive_count


def bootstrap(ds: MultiLabelDataset, rng: RngStream) -> MultiLabelDataset:
    """Resample n rows uniformly with replacement, keeping row pairing."""
    gen = rng.generator()
    indices = gen.integers(0, ds.n, size=ds.n)
    return ds.take_rows(indices)


def random_undersample(bd: BinaryDataset, rng: RngStream) -> BinaryDataset:
    """Drop majority rows uniformly at random until both classes are equal.

    Minority rows are all retained and surviving rows keep their original
    order. Requires both classes present.
    """
    pos = bd.positive_count
    neg = bd.negative_count
    if pos == 0 or neg == 0:
        raise SingleClassInput(
            f"undersampling needs both classes, got {pos} positives / {neg} negatives"
        )
    if pos == neg:
        return bd
    majority_value = 1 if pos > neg else 0
    m = min(pos, neg)
    big = max(pos, neg)
    majority_rows = np.flatnonzero(bd.targets == majority_value)
    gen = rng.generator()
    removed = gen.choice(majority_rows, size=big - m, replace=False)
    keep = np.ones(bd.n, dtype=bool)
    keep[removed] = False
    return BinaryDataset(features=bd.features[keep], targets=bd.targets[keep])


def iterative_stratified_kfold(
    ds: MultiLabelDataset, k: int, rng: RngStream
) -> list[np.ndarray]:
    """Split rows into k folds preserving per-label positive proportions.

    Greedy assignment: repeatedly take the label with the fewest unassigned
    positives and hand each of its rows to the fold that still wants the most
    positives of that label, breaking ties by remaining fold capacity and
    then at random. Fold sizes differ by at most one. Returns sorted row
    index arrays that partition [0, n).
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if ds.n < k:
        raise ValueError("cannot split fewer rows than folds")
    gen = rng.generator()
    n, q = ds.n, ds.q
    labels = ds.labels
    capacity = np.full(k, n // k, dtype=np.int64)
    capacity[: n % k] += 1
    # desire[f, l]: how many positives of label l fold f still wants.
    desire = np.tile(labels.sum(axis=0).astype(np.float64) / k, (k, 1))
    assigned = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    folds: list[list[int]] = [[] for _ in range(k)]

    def place(row: int, fold: int) -> None:
        assigned[row] = fold
        remaining[row] = False
        capacity[fold] -= 1
        desire[fold] -= labels[row]
        folds[fold].append(row)

    while remaining.any():
        counts = labels[remaining].sum(axis=0)
        positive_labels = np.flatnonzero(counts > 0)
        if positive_labels.size == 0:
            # Rows with no positive labels left: balance by capacity.
            for row in np.flatnonzero(remaining):
                open_folds = np.flatnonzero(capacity > 0)
                best = open_folds[capacity[open_folds] == capacity[open_folds].max()]
                fold = int(best[0]) if best.size == 1 else int(gen.choice(best))
                place(int(row), fold)
            break
        rarest = int(positive_labels[np.argmin(counts[positive_labels])])
        rows = np.flatnonzero(remaining & (labels[:, rarest] == 1))
        for row in rows:
            open_folds = np.flatnonzero(capacity > 0)
            want = desire[open_folds, rarest]
            candidates = open_folds[want == want.max()]
            if candidates.size > 1:
                caps = capacity[candidates]
                candidates = candidates[caps == caps.max()]
            fold = int(candidates[0]) if candidates.size == 1 else int(gen.choice(candidates))
            place(int(row), fold)

    return [np.array(sorted(rows), dtype=np.int64) for rows in folds]
