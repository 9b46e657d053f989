"""Synthetic two-factor embedding datasets.

Embeddings concatenate two blocks drawn independently: each block is an
isotropic Gaussian mixture over its own class variable. The semantic label
is the block-2 class; the block-1 class (the stand-in for a surrogate task)
rides along in dataset metadata. Projecting onto block 1 therefore yields a
representation that carries no label information, while block 2 keeps the
labels linearly separable at reasonable separations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import LabeledDataset
from .errors import SynthError

__all__ = [
    "TwoFactorSpec",
    "generate_two_factor",
    "generate_two_factor_pair",
    "blind_projection",
]

# offset so a paired test set never reuses a nearby pipeline seed's stream
_TEST_SEED_OFFSET = 1_000_003

_KEEP_CHOICES = ("factor1_block", "factor2_block", "both")


@dataclass(frozen=True)
class TwoFactorSpec:
    n_samples: int = 4000
    d1: int = 16
    d2: int = 16
    c1: int = 4
    c2: int = 4
    cluster_separation: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise SynthError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.d1 < 1 or self.d2 < 1:
            raise SynthError("block dims must be >= 1")
        if self.c1 < 2 or self.c2 < 2:
            raise SynthError("both factors need at least 2 classes")
        if not self.cluster_separation > 0:
            raise SynthError(f"cluster_separation must be > 0, got {self.cluster_separation}")
        if self.c1 > self.d1 or self.c2 > self.d2:
            raise SynthError("centroid layout needs c <= d in each block")


def _centroids(n_classes: int, dim: int, separation: float) -> np.ndarray:
    """Scaled standard basis vectors: all pairwise distances = separation."""
    out = np.zeros((n_classes, dim), dtype=np.float64)
    scale = separation / np.sqrt(2.0)
    out[np.arange(n_classes), np.arange(n_classes)] = scale
    return out


def generate_two_factor(spec: TwoFactorSpec, split_tag: str = "train") -> LabeledDataset:
    """One dataset draw; byte-identical for identical specs."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    cls1 = rng.integers(0, spec.c1, size=spec.n_samples)
    cls2 = rng.integers(0, spec.c2, size=spec.n_samples)
    block1 = _centroids(spec.c1, spec.d1, spec.cluster_separation)[cls1]
    block1 = block1 + rng.standard_normal((spec.n_samples, spec.d1))
    block2 = _centroids(spec.c2, spec.d2, spec.cluster_separation)[cls2]
    block2 = block2 + rng.standard_normal((spec.n_samples, spec.d2))
    return LabeledDataset(
        embeddings=np.hstack([block1, block2]).astype(np.float32),
        labels=cls2.astype(np.int64),
        class_names=[f"semantic_{i}" for i in range(spec.c2)],
        split_tag=split_tag,
        meta={
            "two_factor": {
                "d1": spec.d1,
                "d2": spec.d2,
                "c1": spec.c1,
                "separation": spec.cluster_separation,
                "seed": spec.seed,
                "factor1_labels": [int(v) for v in cls1],
            }
        },
    )


def generate_two_factor_pair(spec: TwoFactorSpec) -> tuple[LabeledDataset, LabeledDataset]:
    """Matched train/test draw from the same mixture (centroids are seed-free)."""
    train = generate_two_factor(spec, split_tag="train")
    test_spec = TwoFactorSpec(
        n_samples=spec.n_samples,
        d1=spec.d1,
        d2=spec.d2,
        c1=spec.c1,
        c2=spec.c2,
        cluster_separation=spec.cluster_separation,
        seed=spec.seed + _TEST_SEED_OFFSET,
    )
    return train, generate_two_factor(test_spec, split_tag="test")


def blind_projection(dataset: LabeledDataset, keep: str) -> LabeledDataset:
    """Keep one coordinate block (or both); labels are untouched."""
    if keep not in _KEEP_CHOICES:
        raise SynthError(f"keep must be one of {_KEEP_CHOICES}, got {keep!r}")
    info = dataset.meta.get("two_factor")
    if not isinstance(info, dict) or "d1" not in info or "d2" not in info:
        raise SynthError("dataset was not produced by generate_two_factor")
    d1, d2 = int(info["d1"]), int(info["d2"])
    if dataset.dim != d1 + d2:
        raise SynthError(f"metadata declares {d1}+{d2} dims, dataset has {dataset.dim}")
    if keep == "both":
        columns = slice(None)
    elif keep == "factor1_block":
        columns = slice(0, d1)
    else:
        columns = slice(d1, d1 + d2)
    meta = {k: v for k, v in dataset.meta.items() if k != "two_factor"}
    if keep == "both":
        meta["two_factor"] = info
    else:
        meta["projected_block"] = keep
    return LabeledDataset(
        embeddings=dataset.embeddings[:, columns],
        labels=dataset.labels,
        class_names=list(dataset.class_names),
        logits=dataset.logits,
        split_tag=dataset.split_tag,
        meta=meta,
    )
