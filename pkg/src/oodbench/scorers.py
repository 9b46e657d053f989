"""OOD scorers: MSP, Mahalanobis distance, and kNN distance.

All scorers share one orientation: higher score = more OOD.

  * msp: 1 - max softmax probability of a logit row.
  * mahalanobis: distance from the centroid of all ID training embeddings
    under the (shrinkage-regularized) ID training covariance.
  * knn: Euclidean distance to the k-th nearest ID training embedding,
    optionally in unit-normalized space.

Scoring is pure and per-row, so any chunking over test rows produces
identical results; distance sums use a fixed order within each row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import LabeledDataset
from .errors import ScorerError
from .splitgen import BenchmarkSplit

__all__ = [
    "MahalanobisModel",
    "KnnIndex",
    "ScorerConfig",
    "msp_score",
    "msp_scores",
    "fit_mahalanobis",
    "mahalanobis_score",
    "mahalanobis_scores",
    "fit_knn_index",
    "knn_score",
    "knn_scores",
    "default_knn_k",
    "score_split",
]

DEFAULT_SHRINKAGE = 1e-3
_CHUNK_ROWS = 256


@dataclass(frozen=True)
class MahalanobisModel:
    mean: np.ndarray        # (dim,)
    precision: np.ndarray   # (dim, dim), symmetric positive definite
    shrinkage: float


@dataclass(frozen=True)
class KnnIndex:
    reference: np.ndarray   # (n_ref, dim), unit rows when normalized
    k: int
    normalized: bool


@dataclass(frozen=True)
class ScorerConfig:
    method: str                  # "msp" | "mahalanobis" | "knn"
    k: int | None = None         # kNN rank; None = max(1, round(0.01 * n_train))
    normalize: bool = True       # kNN only
    shrinkage: float = DEFAULT_SHRINKAGE  # mahalanobis only

    def __post_init__(self):
        if self.method not in ("msp", "mahalanobis", "knn"):
            raise ScorerError(f"unknown scorer method {self.method!r}")
        if self.k is not None and self.k < 1:
            raise ScorerError(f"k must be >= 1, got {self.k}")
        if self.shrinkage < 0:
            raise ScorerError(f"shrinkage must be >= 0, got {self.shrinkage}")


def _finite_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ScorerError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        r, c = np.argwhere(~np.isfinite(arr))[0]
        raise ScorerError(f"non-finite value in {name} at row {int(r)}, column {int(c)}")
    return arr


def _finite_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if not np.all(np.isfinite(arr)):
        raise ScorerError(f"non-finite value in {name}")
    return arr


# ---------------------------------------------------------------------------
# MSP


def msp_scores(logit_matrix) -> np.ndarray:
    """1 - max softmax per row, with max-subtraction for stability."""
    logits = _finite_matrix(logit_matrix, "logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    top = expd[np.arange(len(expd)), shifted.argmax(axis=1)]
    return 1.0 - top / expd.sum(axis=1)


def msp_score(logit_row) -> float:
    return float(msp_scores(np.atleast_2d(_finite_vector(logit_row, "logits")))[0])


# ---------------------------------------------------------------------------
# Mahalanobis


def fit_mahalanobis(train_embeddings, shrinkage: float = DEFAULT_SHRINKAGE) -> MahalanobisModel:
    """Fit a single global Gaussian to the ID training embeddings.

    covariance = sample covariance (n-1 denominator)
                 + shrinkage * trace(sample covariance) / dim * identity
    The precision matrix comes from a symmetric eigendecomposition; a
    covariance that stays singular after shrinkage is an error.
    """
    x = _finite_matrix(train_embeddings, "train embeddings")
    n, dim = x.shape
    if n < 2:
        raise ScorerError(f"need at least 2 training rows, got {n}")
    if shrinkage < 0:
        raise ScorerError(f"shrinkage must be >= 0, got {shrinkage}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    cov = cov + shrinkage * (np.trace(cov) / dim) * np.eye(dim)
    eigvals, eigvecs = np.linalg.eigh(cov)
    smallest = float(eigvals[0])
    if smallest <= 1e-12 * max(1.0, float(eigvals[-1])):
        raise ScorerError(
            f"covariance not invertible (smallest eigenvalue {smallest:.3e}); "
            "increase shrinkage"
        )
    precision = (eigvecs / eigvals) @ eigvecs.T
    precision = (precision + precision.T) / 2.0
    return MahalanobisModel(mean=mean, precision=precision, shrinkage=float(shrinkage))


def mahalanobis_scores(model: MahalanobisModel, x) -> np.ndarray:
    arr = _finite_matrix(x, "embeddings")
    if arr.shape[1] != model.mean.shape[0]:
        raise ScorerError(
            f"dim mismatch: model dim {model.mean.shape[0]}, input dim {arr.shape[1]}"
        )
    dev = arr - model.mean
    quad = np.einsum("ij,jk,ik->i", dev, model.precision, dev)
    return np.sqrt(np.maximum(quad, 0.0))


def mahalanobis_score(model: MahalanobisModel, x) -> float:
    return float(mahalanobis_scores(model, np.atleast_2d(_finite_vector(x, "embedding")))[0])


# ---------------------------------------------------------------------------
# kNN


def default_knn_k(n_train: int) -> int:
    """k = max(1, round(0.01 * n_train)); recorded in report provenance."""
    return max(1, int(np.floor(0.01 * n_train + 0.5)))


def _unit_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    bad = np.flatnonzero(norms <= 1e-30)
    if bad.size:
        raise ScorerError(f"cannot normalize zero-norm {what} row {int(bad[0])}")
    return x / norms[:, None]


def fit_knn_index(train_embeddings, k: int, normalize: bool = True) -> KnnIndex:
    x = _finite_matrix(train_embeddings, "train embeddings")
    n = x.shape[0]
    if not (1 <= k <= n):
        raise ScorerError(f"k must be in [1, {n}], got {k}")
    if normalize:
        x = _unit_rows(x, "reference")
    return KnnIndex(reference=x.copy(), k=int(k), normalized=bool(normalize))


def knn_scores(index: KnnIndex, x) -> np.ndarray:
    """Exact k-th smallest Euclidean distance per query row.

    Duplicated reference rows count with multiplicity (distances are sorted
    ascending and the k-th, 1-indexed, is returned).
    """
    arr = _finite_matrix(x, "embeddings")
    if arr.shape[1] != index.reference.shape[1]:
        raise ScorerError(
            f"dim mismatch: index dim {index.reference.shape[1]}, input dim {arr.shape[1]}"
        )
    if index.normalized:
        arr = _unit_rows(arr, "query")
    out = np.empty(arr.shape[0], dtype=np.float64)
    for start in range(0, arr.shape[0], _CHUNK_ROWS):
        chunk = arr[start : start + _CHUNK_ROWS]
        diff = chunk[:, None, :] - index.reference[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        kth = np.partition(sq, index.k - 1, axis=1)[:, index.k - 1]
        out[start : start + _CHUNK_ROWS] = np.sqrt(np.maximum(kth, 0.0))
    return out


def knn_score(index: KnnIndex, x) -> float:
    return float(knn_scores(index, np.atleast_2d(_finite_vector(x, "embedding")))[0])


# ---------------------------------------------------------------------------
# split-level scoring


def _resolved_config(config: ScorerConfig, n_train: int) -> ScorerConfig:
    if config.method == "knn" and config.k is None:
        return ScorerConfig(
            method=config.method,
            k=default_knn_k(n_train),
            normalize=config.normalize,
            shrinkage=config.shrinkage,
        )
    return config


def score_split(
    split: BenchmarkSplit,
    config: ScorerConfig,
    train: LabeledDataset,
    test: LabeledDataset,
    ood_test: LabeledDataset | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fit on the split's ID training rows and score ID / OOD test rows.

    For cross-dataset splits the OOD rows come from `ood_test`; adjacent
    splits read both row sets from `test`. Output order follows the split's
    index vectors.
    """
    ood_source = test
    if split.kind == "cross_dataset":
        if ood_test is None:
            raise ScorerError("cross-dataset split requires an OOD dataset")
        ood_source = ood_test

    fit_rows = train.embeddings[split.train_id_idx]
    id_rows = test.embeddings[split.test_id_idx]
    ood_rows = ood_source.embeddings[split.test_ood_idx]

    if config.method == "msp":
        if test.logits is None or ood_source.logits is None:
            raise ScorerError("msp scorer requires logits in the test datasets")
        return (
            msp_scores(test.logits[split.test_id_idx]),
            msp_scores(ood_source.logits[split.test_ood_idx]),
        )
    if config.method == "mahalanobis":
        model = fit_mahalanobis(fit_rows, shrinkage=config.shrinkage)
        return mahalanobis_scores(model, id_rows), mahalanobis_scores(model, ood_rows)
    if config.method == "knn":
        cfg = _resolved_config(config, len(fit_rows))
        index = fit_knn_index(fit_rows, k=cfg.k, normalize=cfg.normalize)
        return knn_scores(index, id_rows), knn_scores(index, ood_rows)
    raise ScorerError(f"unknown scorer method {config.method!r}")
