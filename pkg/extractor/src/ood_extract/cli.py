"""The ood-extract command."""

from __future__ import annotations

import argparse
import json
import sys

from .extractor import ExtractionError, ExtractorConfig, extract


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ood-extract",
        description="Export a class-per-folder image dataset (train/ and test/ "
        "subdirectories) as oodbench embedding files.",
    )
    parser.add_argument("--dataset", required=True, help="dataset root directory")
    parser.add_argument("--backbone", default="resnet50")
    parser.add_argument("--layer", default="penultimate",
                        choices=["penultimate", "projection_head", "logits"])
    parser.add_argument("--size", type=int, default=64, help="image side length")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--weights", default="none",
                        help="'none' (seeded random init), 'default', or a state-dict path")
    parser.add_argument("--out", required=True, help="output prefix")
    args = parser.parse_args(argv)

    config = ExtractorConfig(
        dataset_dir=args.dataset,
        output_prefix=args.out,
        backbone=args.backbone,
        layer=args.layer,
        image_size=args.size,
        batch_size=args.batch,
        device=args.device,
        weights=args.weights,
    )
    try:
        summary = extract(config)
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
