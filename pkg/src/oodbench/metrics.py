"""Detection metrics with exact tie handling.

Conventions (recorded in every report):
  * AUROC treats OOD as the positive class; higher score means "more OOD".
    It is computed as the normalized Mann-Whitney U via midranks, which
    equals P(ood > id) + 0.5 * P(ood = id) over all pairs.
  * FPR@TPR treats ID as the positive class: the threshold t is the
    smallest observed ID score such that the fraction of ID samples with
    score <= t reaches the target TPR (ties at t count as ID), and the
    returned value is the fraction of OOD samples with score <= t.
  * Aggregation over seeds reports the mean and the sample standard
    deviation (n-1 denominator, 0 for a single seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricError

__all__ = [
    "MetricResult",
    "AggregateResult",
    "auroc",
    "fpr_at_tpr",
    "evaluate_scores",
    "aggregate",
    "format_mean_std",
]


@dataclass(frozen=True)
class MetricResult:
    auroc: float
    fpr95: float
    n_id: int
    n_ood: int

    def __post_init__(self):
        if not (0.0 <= self.auroc <= 1.0 and 0.0 <= self.fpr95 <= 1.0):
            raise MetricError("metric values must lie in [0, 1]")
        if self.n_id <= 0 or self.n_ood <= 0:
            raise MetricError("sample counts must be positive")


@dataclass(frozen=True)
class AggregateResult:
    mean_auroc: float
    std_auroc: float
    mean_fpr95: float
    std_fpr95: float
    n_seeds: int


def _as_scores(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).ravel()
    if arr.size == 0:
        raise MetricError(f"{name} scores are empty")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise MetricError(f"non-finite value in {name} scores at position {bad}")
    return arr


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their run."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_vals)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [values.size]))
    # run occupies 0-based [start, end); its 1-based ranks average to (start+end+1)/2
    mids = (starts + ends + 1) / 2.0
    ranks = np.empty(values.size, dtype=np.float64)
    ranks[order] = np.repeat(mids, ends - starts)
    return ranks


def auroc(id_scores, ood_scores) -> float:
    """P(ood > id) + 0.5 P(ood = id) over all (ood, id) pairs.

    Computed in O((n+m) log(n+m)) from the rank sum; exactly equal to the
    normalized Mann-Whitney U with midrank tie handling.
    """
    id_arr = _as_scores(id_scores, "id")
    ood_arr = _as_scores(ood_scores, "ood")
    n, m = id_arr.size, ood_arr.size
    ranks = _midranks(np.concatenate([id_arr, ood_arr]))
    u = ranks[n:].sum() - m * (m + 1) / 2.0
    return float(u / (n * m))


def fpr_at_tpr(id_scores, ood_scores, target_tpr: float = 0.95) -> float:
    """Fraction of OOD samples accepted as ID at the ID-TPR threshold.

    The threshold is taken on the grid of observed ID scores: the smallest
    t with frac(id <= t) >= target_tpr. A sample counts as ID when its
    score is <= t, so OOD scores tied with t are (wrongly) kept.
    """
    if not (0.0 < target_tpr <= 1.0):
        raise MetricError(f"target_tpr must be in (0, 1], got {target_tpr}")
    id_arr = np.sort(_as_scores(id_scores, "id"))
    ood_arr = _as_scores(ood_scores, "ood")
    n = id_arr.size
    # smallest k with k/n >= target; the 1e-9 slack absorbs float noise in
    # products like 0.95 * 20 that are intended to be exact integers
    k = math.ceil(target_tpr * n - 1e-9)
    threshold = id_arr[max(k, 1) - 1]
    return float(np.mean(ood_arr <= threshold))


def evaluate_scores(id_scores, ood_scores, target_tpr: float = 0.95) -> MetricResult:
    """Bundle AUROC and FPR@TPR for one (id, ood) score pair."""
    id_arr = _as_scores(id_scores, "id")
    ood_arr = _as_scores(ood_scores, "ood")
    return MetricResult(
        auroc=auroc(id_arr, ood_arr),
        fpr95=fpr_at_tpr(id_arr, ood_arr, target_tpr),
        n_id=int(id_arr.size),
        n_ood=int(ood_arr.size),
    )


def aggregate(results: list[MetricResult]) -> AggregateResult:
    """Mean and sample std (ddof=1; 0 when a single result) over seeds."""
    if not results:
        raise MetricError("cannot aggregate an empty result list")
    aurocs = np.array([r.auroc for r in results], dtype=np.float64)
    fprs = np.array([r.fpr95 for r in results], dtype=np.float64)
    n = len(results)
    std = lambda a: float(np.std(a, ddof=1)) if n > 1 else 0.0
    return AggregateResult(
        mean_auroc=float(aurocs.mean()),
        std_auroc=std(aurocs),
        mean_fpr95=float(fprs.mean()),
        std_fpr95=std(fprs),
        n_seeds=n,
    )


def format_mean_std(mean: float, std: float) -> str:
    """Render a metric pair in percentage points, e.g. (0.520, 0.042) -> '52.0±4.2'."""
    return f"{100.0 * mean:.1f}±{100.0 * std:.1f}"
