"""Run orchestration: config in, report out.

A run loads a train/test dataset pair (plus an optional cross-dataset OOD
set), generates the configured splits, scores every (scorer, seed) cell,
and emits a JSON report plus a CSV table with mean±std display cells.
Reports are a pure function of the config and inputs: no timestamps, fixed
cell order, canonical JSON. Any cell failure aborts the run; partial
reports are never written.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .datamodel import LabeledDataset, load_dataset, validate_pair
from .errors import ConfigError, OodbenchError
from .metrics import (
    AggregateResult,
    MetricResult,
    aggregate,
    evaluate_scores,
    format_mean_std,
)
from .scorers import ScorerConfig, default_knn_k, score_split
from .splitgen import generate_split_series, make_cross_dataset_split

__all__ = [
    "SplitSpec",
    "RunConfig",
    "EvalReport",
    "run_benchmark",
    "ingest_external_scores",
    "read_score_file",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SplitSpec:
    kind: str = "adjacent"  # "adjacent" | "cross_dataset"
    ood_fraction: float = 0.25
    base_seed: int = 0
    n_repeats: int = 3

    def __post_init__(self):
        if self.kind not in ("adjacent", "cross_dataset"):
            raise ConfigError(f"unknown split kind {self.kind!r}")
        if self.n_repeats < 1:
            raise ConfigError(f"n_repeats must be >= 1, got {self.n_repeats}")


@dataclass(frozen=True)
class RunConfig:
    train_path: str
    test_path: str
    split: SplitSpec
    scorers: tuple[ScorerConfig, ...]
    output_dir: str
    ood_test_path: str | None = None

    def __post_init__(self):
        if not self.scorers:
            raise ConfigError("at least one scorer is required")
        if self.split.kind == "cross_dataset" and self.ood_test_path is None:
            raise ConfigError("cross_dataset runs require ood_test_path")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            split = SplitSpec(**raw.get("split", {}))
            scorers = tuple(ScorerConfig(**s) for s in raw["scorers"])
            return cls(
                train_path=raw["train_path"],
                test_path=raw["test_path"],
                split=split,
                scorers=scorers,
                output_dir=raw["output_dir"],
                ood_test_path=raw.get("ood_test_path"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed run config: {exc!r}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read run config {path}: {exc}") from exc
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "train_path": self.train_path,
            "test_path": self.test_path,
            "ood_test_path": self.ood_test_path,
            "split": vars(self.split).copy(),
            "scorers": [vars(s).copy() for s in self.scorers],
            "output_dir": self.output_dir,
        }


@dataclass(frozen=True)
class ScorerCell:
    scorer_label: str
    per_seed: tuple[tuple[int, MetricResult], ...]
    aggregate: AggregateResult


@dataclass(frozen=True)
class EvalReport:
    config_hash: str
    seeds: tuple[int, ...]
    resolved_scorers: tuple[dict, ...]
    cells: tuple[ScorerCell, ...]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "provenance": {
                "library_version": __version__,
                "config_hash": self.config_hash,
                "seeds": list(self.seeds),
                "scorers": [dict(s) for s in self.resolved_scorers],
                "conventions": {
                    "score_orientation": "higher_is_more_ood",
                    "auroc": "mann_whitney_midrank",
                    "fpr95": "fraction_of_ood_kept_at_id_tpr_0.95",
                    "aggregate_std": "sample_std_over_seeds",
                    "train_restricted_to_id_classes": True,
                },
            },
            "results": [
                {
                    "scorer": cell.scorer_label,
                    "per_seed": [
                        {
                            "seed": seed,
                            "auroc": r.auroc,
                            "fpr95": r.fpr95,
                            "n_id": r.n_id,
                            "n_ood": r.n_ood,
                        }
                        for seed, r in cell.per_seed
                    ],
                    "aggregate": {
                        "mean_auroc": cell.aggregate.mean_auroc,
                        "std_auroc": cell.aggregate.std_auroc,
                        "mean_fpr95": cell.aggregate.mean_fpr95,
                        "std_fpr95": cell.aggregate.std_fpr95,
                        "n_seeds": cell.aggregate.n_seeds,
                    },
                    "display": {
                        "auroc": format_mean_std(
                            cell.aggregate.mean_auroc, cell.aggregate.std_auroc
                        ),
                        "fpr95": format_mean_std(
                            cell.aggregate.mean_fpr95, cell.aggregate.std_fpr95
                        ),
                    },
                }
                for cell in self.cells
            ],
        }

    def to_csv(self) -> str:
        lines = ["scorer,auroc,fpr95"]
        for cell in self.cells:
            a = format_mean_std(cell.aggregate.mean_auroc, cell.aggregate.std_auroc)
            f = format_mean_std(cell.aggregate.mean_fpr95, cell.aggregate.std_fpr95)
            lines.append(f"{cell.scorer_label},{a},{f}")
        return "\n".join(lines) + "\n"


def _config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _scorer_label(cfg: ScorerConfig) -> str:
    return cfg.method


def _resolved_scorer_dict(cfg: ScorerConfig, n_train_hint: int) -> dict:
    d = {"method": cfg.method}
    if cfg.method == "knn":
        d["k"] = cfg.k if cfg.k is not None else f"default_1pct(~{default_knn_k(n_train_hint)})"
        d["normalize"] = cfg.normalize
    if cfg.method == "mahalanobis":
        d["shrinkage"] = cfg.shrinkage
    return d


def _max_workers() -> int:
    env = os.environ.get("OODBENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"OODBENCH_THREADS must be an integer, got {env!r}") from exc
    return min(4, os.cpu_count() or 1)


def run_benchmark(config: RunConfig, write_files: bool = True) -> EvalReport:
    """Execute every (scorer, seed) cell and assemble the report.

    Deterministic given the config and input files. Raises on the first
    cell failure (annotated with scorer and seed); nothing is written
    unless every cell succeeded.
    """
    train = load_dataset(config.train_path, split="train")
    test = load_dataset(config.test_path, split="test")
    validate_pair(train, test)
    ood_test: LabeledDataset | None = None
    if config.ood_test_path is not None:
        ood_test = load_dataset(config.ood_test_path, split="test")

    if config.split.kind == "adjacent":
        splits = generate_split_series(
            train, test, config.split.ood_fraction, config.split.base_seed,
            config.split.n_repeats,
        )
    else:
        splits = [make_cross_dataset_split(train, test, ood_test, seed=config.split.base_seed)]

    tasks = [(cfg, split) for cfg in config.scorers for split in splits]

    def run_cell(cfg: ScorerConfig, split) -> MetricResult:
        try:
            id_scores, ood_scores = score_split(split, cfg, train, test, ood_test)
            return evaluate_scores(id_scores, ood_scores)
        except OodbenchError as exc:
            raise ConfigError(
                f"scorer {cfg.method!r}, seed {split.seed}: {exc}"
            ) from exc

    workers = _max_workers()
    if workers == 1:
        outcomes = [run_cell(cfg, split) for cfg, split in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, cfg, split) for cfg, split in tasks]
            outcomes = [f.result() for f in futures]  # config order, fail fast

    cells = []
    per_scorer = len(splits)
    for i, cfg in enumerate(config.scorers):
        results = outcomes[i * per_scorer : (i + 1) * per_scorer]
        cells.append(
            ScorerCell(
                scorer_label=_scorer_label(cfg),
                per_seed=tuple((split.seed, r) for split, r in zip(splits, results)),
                aggregate=aggregate(results),
            )
        )

    report = EvalReport(
        config_hash=_config_hash(config),
        seeds=tuple(s.seed for s in splits),
        resolved_scorers=tuple(
            _resolved_scorer_dict(cfg, len(splits[0].train_id_idx)) for cfg in config.scorers
        ),
        cells=tuple(cells),
    )
    if write_files:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    return report


def read_score_file(path: str | Path) -> list[float]:
    """One finite float per line; blank lines are not allowed."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read score file {path}: {exc}") from exc
    scores = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            v = float(line.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}: line {lineno}: not a number: {line!r}") from exc
        if not (v == v and abs(v) != float("inf")):
            raise ConfigError(f"{path}: line {lineno}: non-finite score")
        scores.append(v)
    if not scores:
        raise ConfigError(f"{path}: no scores")
    return scores


def ingest_external_scores(id_scores_path: str | Path, ood_scores_path: str | Path) -> MetricResult:
    """Metrics straight from externally produced score files (pass-through scorer)."""
    return evaluate_scores(read_score_file(id_scores_path), read_score_file(ood_scores_path))
