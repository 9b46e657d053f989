"""Benchmark split construction.

Adjacent splits hold out a random subset of one dataset's classes as OOD
(class sampling without replacement); cross-dataset splits use a second
dataset as the OOD pool. Class shuffling is a Fisher-Yates pass over the
sorted class indices driven by a Philox counter-based generator, so a
(datasets, fraction, seed) triple always yields the same split.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import LabeledDataset, validate_pair
from .errors import SplitError

__all__ = [
    "BenchmarkSplit",
    "generate_adjacent_split",
    "generate_split_series",
    "make_cross_dataset_split",
    "split_to_dict",
    "split_from_dict",
    "save_split",
    "load_split",
]


@dataclass(frozen=True)
class BenchmarkSplit:
    seed: int
    kind: str  # "adjacent" | "cross_dataset"
    id_classes: tuple[int, ...]
    ood_classes: tuple[int, ...]
    train_id_idx: np.ndarray
    test_id_idx: np.ndarray
    test_ood_idx: np.ndarray


class _PhiloxDraws:
    """Sequential unbiased bounded integers from a Philox stream."""

    def __init__(self, seed: int):
        self._bg = np.random.Philox(seed)

    def randbelow(self, bound: int) -> int:
        if bound <= 0:
            raise ValueError("bound must be positive")
        span = 1 << 64
        limit = span - span % bound
        while True:
            u = int(self._bg.random_raw())
            if u < limit:
                return u % bound


def _fisher_yates(items: list[int], draws: _PhiloxDraws) -> list[int]:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = draws.randbelow(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def ood_class_count(n_classes: int, ood_fraction: float) -> int:
    """round(fraction * n_classes), half up, clamped to [1, n_classes - 1]."""
    return min(max(_round_half_up(ood_fraction * n_classes), 1), n_classes - 1)


def _label_rows(labels: np.ndarray, classes: tuple[int, ...]) -> np.ndarray:
    return np.flatnonzero(np.isin(labels, np.asarray(classes, dtype=np.int64)))


def generate_adjacent_split(
    train: LabeledDataset,
    test: LabeledDataset,
    ood_fraction: float,
    seed: int,
) -> BenchmarkSplit:
    """Hold out a seeded random subset of classes as the OOD set.

    Training indices are restricted to ID classes; every test row lands in
    exactly one of test_id / test_ood.
    """
    validate_pair(train, test)
    n_classes = train.n_classes
    if n_classes < 2:
        raise SplitError(f"need at least 2 classes to split, got {n_classes}")
    if not (0.0 < ood_fraction < 1.0):
        raise SplitError(f"ood_fraction must be in (0, 1), got {ood_fraction}")
    n_ood = ood_class_count(n_classes, ood_fraction)
    shuffled = _fisher_yates(sorted(range(n_classes)), _PhiloxDraws(seed))
    ood_classes = tuple(sorted(shuffled[:n_ood]))
    id_classes = tuple(sorted(shuffled[n_ood:]))
    split = BenchmarkSplit(
        seed=seed,
        kind="adjacent",
        id_classes=id_classes,
        ood_classes=ood_classes,
        train_id_idx=_label_rows(train.labels, id_classes),
        test_id_idx=_label_rows(test.labels, id_classes),
        test_ood_idx=_label_rows(test.labels, ood_classes),
    )
    for name in ("train_id_idx", "test_id_idx", "test_ood_idx"):
        if getattr(split, name).size == 0:
            raise SplitError(f"seed {seed}: {name} is empty; refusing a degenerate split")
    return split


def generate_split_series(
    train: LabeledDataset,
    test: LabeledDataset,
    ood_fraction: float,
    base_seed: int,
    n_repeats: int,
) -> list[BenchmarkSplit]:
    """Splits for seeds base_seed .. base_seed + n_repeats - 1."""
    if n_repeats < 1:
        raise SplitError(f"n_repeats must be >= 1, got {n_repeats}")
    return [
        generate_adjacent_split(train, test, ood_fraction, base_seed + r)
        for r in range(n_repeats)
    ]


def make_cross_dataset_split(
    id_train: LabeledDataset,
    id_test: LabeledDataset,
    ood_test: LabeledDataset,
    seed: int = 0,
) -> BenchmarkSplit:
    """Use every row of a second dataset as the OOD test pool."""
    validate_pair(id_train, id_test)
    if ood_test.dim != id_train.dim:
        raise SplitError(
            f"OOD dataset dim {ood_test.dim} does not match ID dim {id_train.dim}"
        )
    if ood_test.n_samples == 0:
        raise SplitError("OOD dataset has no rows")
    id_classes = tuple(range(id_train.n_classes))
    return BenchmarkSplit(
        seed=seed,
        kind="cross_dataset",
        id_classes=id_classes,
        ood_classes=tuple(sorted(int(c) for c in np.unique(ood_test.labels))),
        train_id_idx=np.arange(id_train.n_samples, dtype=np.int64),
        test_id_idx=np.arange(id_test.n_samples, dtype=np.int64),
        test_ood_idx=np.arange(ood_test.n_samples, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# serialization


def split_to_dict(split: BenchmarkSplit) -> dict:
    return {
        "seed": split.seed,
        "kind": split.kind,
        "id_classes": list(split.id_classes),
        "ood_classes": list(split.ood_classes),
        "train_id_idx": split.train_id_idx.tolist(),
        "test_id_idx": split.test_id_idx.tolist(),
        "test_ood_idx": split.test_ood_idx.tolist(),
    }


def split_from_dict(d: dict) -> BenchmarkSplit:
    try:
        return BenchmarkSplit(
            seed=int(d["seed"]),
            kind=str(d["kind"]),
            id_classes=tuple(int(c) for c in d["id_classes"]),
            ood_classes=tuple(int(c) for c in d["ood_classes"]),
            train_id_idx=np.asarray(d["train_id_idx"], dtype=np.int64),
            test_id_idx=np.asarray(d["test_id_idx"], dtype=np.int64),
            test_ood_idx=np.asarray(d["test_ood_idx"], dtype=np.int64),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SplitError(f"malformed split record: {exc!r}") from exc


def save_split(split: BenchmarkSplit, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(split_to_dict(split), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_split(path: str | Path) -> BenchmarkSplit:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SplitError(f"cannot read split file {path}: {exc}") from exc
    return split_from_dict(raw)
