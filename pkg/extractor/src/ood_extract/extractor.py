"""Embedding/logit extraction from class-per-folder image datasets.

The dataset root must hold `train/` and `test/` directories, each with one
subdirectory per class. Rows follow lexicographic (class, filename) order,
so re-extraction with the same config reproduces identical files. Unreadable
images are skipped and listed in a `<prefix>.skips.json` manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .fileformat import write_embedding_files

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}

# ImageNet statistics; fixed so extraction is a pure function of the config
_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

_LAYERS = ("penultimate", "projection_head", "logits")


class ExtractionError(Exception):
    pass


@dataclass(frozen=True)
class ExtractorConfig:
    dataset_dir: str
    output_prefix: str
    backbone: str = "resnet50"
    layer: str = "penultimate"
    image_size: int = 64
    batch_size: int = 32
    device: str = "cpu"
    weights: str = "none"  # "none" (seeded random init) | "default" | path to a state dict

    def __post_init__(self):
        if self.layer not in _LAYERS:
            raise ExtractionError(f"layer must be one of {_LAYERS}, got {self.layer!r}")
        if self.image_size < 8:
            raise ExtractionError(f"image_size must be >= 8, got {self.image_size}")
        if self.batch_size < 1:
            raise ExtractionError(f"batch_size must be >= 1, got {self.batch_size}")


def _build_backbone(config: ExtractorConfig) -> tuple[torch.nn.Module, int]:
    """Instantiate the model and return it with its classifier head width."""
    from torchvision.models import get_model

    if config.weights == "default":
        try:
            model = get_model(config.backbone, weights="DEFAULT")
        except Exception as exc:
            raise ExtractionError(
                f"pretrained weights for {config.backbone!r} not retrievable: {exc}"
            ) from exc
    else:
        # fixed seed so a randomly initialized backbone is still reproducible
        torch.manual_seed(0)
        try:
            model = get_model(config.backbone, weights=None)
        except Exception as exc:
            raise ExtractionError(f"unknown backbone {config.backbone!r}: {exc}") from exc
        if config.weights not in ("none",):
            state = torch.load(config.weights, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
    if not hasattr(model, "fc") or not isinstance(model.fc, torch.nn.Linear):
        raise ExtractionError(
            f"backbone {config.backbone!r} has no linear 'fc' head; "
            "penultimate/logit extraction supports the resnet family"
        )
    head_width = model.fc.out_features
    if config.layer == "projection_head":
        raise ExtractionError(
            f"backbone {config.backbone!r} has no projection head; "
            "use 'penultimate' or 'logits'"
        )
    model.eval()
    return model.to(config.device), head_width


def _list_images(split_dir: Path) -> list[tuple[str, Path]]:
    """(class_name, path) pairs in lexicographic class-then-filename order."""
    pairs = []
    for class_dir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
        for path in sorted(class_dir.iterdir()):
            if path.suffix.lower() in IMAGE_EXTENSIONS:
                pairs.append((class_dir.name, path))
    return pairs


def _load_image(path: Path, size: int) -> np.ndarray:
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((size, size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - _MEAN) / _STD
    return arr.transpose(2, 0, 1)  # CHW


def _forward(model: torch.nn.Module, batch: np.ndarray, device: str) -> tuple[np.ndarray, np.ndarray]:
    """Returns (penultimate features, logits) for one batch."""
    x = torch.from_numpy(batch).to(device)
    with torch.no_grad():
        feats_holder = {}

        def grab(_module, inputs, _output):
            feats_holder["feat"] = inputs[0].detach()

        handle = model.fc.register_forward_hook(grab)
        logits = model(x)
        handle.remove()
    return feats_holder["feat"].cpu().numpy(), logits.cpu().numpy()


def extract(config: ExtractorConfig) -> dict:
    """Run the backbone over both splits and write datamodel files.

    Returns a summary dict with per-split file paths, row counts, and the
    skip manifest path.
    """
    root = Path(config.dataset_dir)
    split_dirs = {}
    for split in ("train", "test"):
        d = root / split
        if not d.is_dir():
            raise ExtractionError(f"dataset needs class folders under {d}")
        split_dirs[split] = d

    listings = {split: _list_images(d) for split, d in split_dirs.items()}
    folder_classes = sorted({name for pairs in listings.values() for name, _ in pairs})
    if len(folder_classes) < 2:
        raise ExtractionError(f"need at least 2 class folders, found {folder_classes}")

    model, head_width = _build_backbone(config)
    if config.layer == "logits":
        if len(folder_classes) > head_width:
            raise ExtractionError(
                f"{len(folder_classes)} folder classes exceed the {head_width}-way head"
            )
        n_classes = head_width
        class_names = folder_classes + [
            f"logit_{i}" for i in range(len(folder_classes), head_width)
        ]
    else:
        n_classes = len(folder_classes)
        class_names = folder_classes
    class_index = {name: i for i, name in enumerate(folder_classes)}

    summary = {"class_names": class_names, "splits": {}}
    skips: dict[str, list[dict]] = {"train": [], "test": []}
    for split, pairs in listings.items():
        rows, labels = [], []
        batch_imgs, batch_labels = [], []
        feats_parts, logits_parts = [], []

        def flush():
            if not batch_imgs:
                return
            feats, logits = _forward(model, np.stack(batch_imgs), config.device)
            feats_parts.append(feats)
            logits_parts.append(logits)
            labels.extend(batch_labels)
            batch_imgs.clear()
            batch_labels.clear()

        for class_name, path in pairs:
            try:
                batch_imgs.append(_load_image(path, config.image_size))
            except (OSError, ValueError) as exc:
                skips[split].append({"path": str(path), "error": str(exc)})
                continue
            batch_labels.append(class_index[class_name])
            if len(batch_imgs) == config.batch_size:
                flush()
        flush()
        if not labels:
            raise ExtractionError(f"no readable images in {split_dirs[split]}")

        embeddings = np.concatenate(feats_parts, axis=0)
        logit_matrix = np.concatenate(logits_parts, axis=0) if config.layer == "logits" else None
        prefix = f"{config.output_prefix}_{split}"
        paths = write_embedding_files(
            prefix,
            embeddings=embeddings,
            labels=np.asarray(labels),
            class_names=class_names,
            split=split,
            logits=logit_matrix,
            meta={
                "extractor": {
                    "backbone": config.backbone,
                    "weights": config.weights,
                    "layer": config.layer,
                    "image_size": config.image_size,
                }
            },
        )
        summary["splits"][split] = {
            "header": str(paths[0]),
            "n_samples": len(labels),
            "dim": int(embeddings.shape[1]),
        }

    manifest = Path(f"{config.output_prefix}.skips.json")
    manifest.write_text(json.dumps(skips, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    summary["skips"] = str(manifest)
    summary["n_skipped"] = sum(len(v) for v in skips.values())
    return summary
