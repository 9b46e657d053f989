"""Command-line interface.

Subcommands: split, synth, score, eval, verify-theory, simulate-overlap,
ingest-scores. Exit code 0 only on complete success.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datamodel import load_dataset, write_dataset
from .errors import OodbenchError, TheoryError
from .infotheory import (
    DiscreteJoint,
    IBConfig,
    overlap_risk_exact,
    simulate_overlap_risk,
    verify_label_blindness,
)
from .metrics import MetricResult
from .runner import RunConfig, ingest_external_scores, run_benchmark
from .scorers import ScorerConfig, score_split
from .splitgen import generate_split_series, load_split, save_split
from .synthgen import TwoFactorSpec, blind_projection, generate_two_factor_pair


def _cmd_split(args) -> int:
    train = load_dataset(args.train, split="train")
    test = load_dataset(args.test, split="test")
    splits = generate_split_series(train, test, args.ood_fraction, args.base_seed, args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for split in splits:
        path = out / f"split_{split.seed}.json"
        save_split(split, path)
        print(path)
    return 0


def _cmd_synth(args) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    spec = TwoFactorSpec(**raw)
    train, test = generate_two_factor_pair(spec)
    if args.keep != "both":
        train = blind_projection(train, args.keep)
        test = blind_projection(test, args.keep)
    for ds, tag in ((train, "train"), (test, "test")):
        paths = write_dataset(ds, f"{args.out}_{tag}")
        print(paths[0])
    return 0


def _cmd_score(args) -> int:
    train = load_dataset(args.train, split="train")
    test = load_dataset(args.test, split="test")
    ood = load_dataset(args.ood, split="test") if args.ood else None
    split = load_split(args.split)
    config = ScorerConfig(
        method=args.method,
        k=args.k,
        normalize=not args.no_normalize,
        shrinkage=args.shrinkage,
    )
    id_scores, ood_scores = score_split(split, config, train, test, ood)
    for vec, tag in ((id_scores, "id"), (ood_scores, "ood")):
        path = Path(f"{args.out}_{tag}.scores.txt")
        path.write_text("\n".join(repr(float(v)) for v in vec) + "\n", encoding="utf-8")
        print(path)
    return 0


def _cmd_eval(args) -> int:
    config = RunConfig.from_file(args.config)
    report = run_benchmark(config)
    for cell in report.cells:
        row = next(r for r in report.to_dict()["results"] if r["scorer"] == cell.scorer_label)
        print(f"{cell.scorer_label}: AUROC {row['display']['auroc']}  FPR95 {row['display']['fpr95']}")
    print(Path(config.output_dir) / "report.json")
    return 0


def _encoder_json(enc) -> dict:
    return {"cells": [list(c) for c in enc.cells], "codes": list(enc.codes)}


def _cmd_verify_theory(args) -> int:
    raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    try:
        joint = DiscreteJoint.from_unnormalized(raw["pmf"], raw["f1"], raw["f2"])
        allowed = raw["y_in"]
    except KeyError as exc:
        raise TheoryError(f"joint spec is missing field {exc}") from exc
    config = IBConfig(
        beta=float(raw.get("beta", 4.0)),
        max_code_size=raw.get("max_code_size"),
    )
    report = verify_label_blindness(joint, allowed, config)
    payload = dataclasses.asdict(report)
    payload["audits"] = [
        {**dataclasses.asdict(a), "encoder": _encoder_json(a.encoder)} for a in report.audits
    ]
    payload["allowed_labels"] = list(report.allowed_labels)
    text = json.dumps(payload, sort_keys=True, indent=2, default=list)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(args.out)
    else:
        print(text)
    return 0 if report.blind else 1


def _cmd_simulate_overlap(args) -> int:
    pmf = np.full(args.classes, 1.0 / args.classes)
    estimate, se = simulate_overlap_risk(pmf, args.n_id, args.trials, args.seed)
    print(
        json.dumps(
            {
                "estimate": estimate,
                "std_error": se,
                "analytic": overlap_risk_exact(pmf, args.n_id),
                "classes": args.classes,
                "n_id": args.n_id,
                "trials": args.trials,
                "seed": args.seed,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_ingest_scores(args) -> int:
    result: MetricResult = ingest_external_scores(args.id, args.ood)
    text = json.dumps(dataclasses.asdict(result), sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oodbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="generate adjacent OOD splits")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ood-fraction", type=float, default=0.25)
    p.add_argument("--seeds", type=int, default=3, help="number of split seeds")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("synth", help="generate a synthetic two-factor dataset pair")
    p.add_argument("--spec", required=True, help="TwoFactorSpec JSON file")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--keep", default="both",
                   choices=["both", "factor1_block", "factor2_block"])
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("score", help="score one split with one scorer")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--ood", default=None, help="cross-dataset OOD set")
    p.add_argument("--split", required=True, help="split JSON file")
    p.add_argument("--method", required=True, choices=["msp", "mahalanobis", "knn"])
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--shrinkage", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="output prefix for score files")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eval", help="run a full benchmark from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("verify-theory", help="audit bottleneck minimizers for label blindness")
    p.add_argument("--spec", required=True, help="joint spec JSON: pmf, f1, f2, y_in, beta")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_verify_theory)

    p = sub.add_parser("simulate-overlap", help="Monte Carlo unseen-label risk")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--n-id", type=int, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate_overlap)

    p = sub.add_parser("ingest-scores", help="metrics from external score files")
    p.add_argument("--id", required=True)
    p.add_argument("--ood", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ingest_scores)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OodbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
