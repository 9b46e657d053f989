"""Dataset containers and the on-disk embedding format.

A dataset on disk is three files sharing a prefix:

  <name>.oodb.json   UTF-8 JSON sidecar header (shape, flags, checksum)
  <name>.oodb.bin    row-major little-endian float32 payload: the
                     n_samples x dim embedding block, followed by the
                     n_samples x n_classes logit block when has_logits
  <name>.labels.csv  one row per sample: index,label,class_name

Alternatively a plain CSV can be ingested: one row per sample, dim feature
columns and a final label column.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DatasetError

__all__ = [
    "LabeledDataset",
    "DatasetHeader",
    "load_dataset",
    "write_dataset",
    "validate_pair",
]

HEADER_SUFFIX = ".oodb.json"
PAYLOAD_SUFFIX = ".oodb.bin"
LABELS_SUFFIX = ".labels.csv"

_SPLIT_TAGS = ("train", "test")


def _checksum(payload: bytes) -> str:
    """64-bit blake2b digest of the payload, hex encoded."""
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


@dataclass(frozen=True)
class DatasetHeader:
    n_samples: int
    dim: int
    n_classes: int
    has_logits: bool
    checksum: str
    byte_order: str = "little"
    value_width: int = 32

    def payload_bytes(self) -> int:
        per_row = self.dim + (self.n_classes if self.has_logits else 0)
        return 4 * self.n_samples * per_row


@dataclass
class LabeledDataset:
    """Embeddings plus labels (and optional logits) for one split."""

    embeddings: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    logits: np.ndarray | None = None
    split_tag: str = "train"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.embeddings = np.asarray(self.embeddings, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.logits is not None:
            self.logits = np.asarray(self.logits, dtype=np.float32)
        _validate_dataset(self)

    @property
    def n_samples(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def has_logits(self) -> bool:
        return self.logits is not None


def _first_nonfinite(arr: np.ndarray) -> tuple[int, int] | None:
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size == 0:
        return None
    r, c = bad[0]
    return int(r), int(c)


def _validate_dataset(ds: LabeledDataset) -> None:
    if ds.embeddings.ndim != 2:
        raise DatasetError("embeddings must be a 2-d matrix")
    n = ds.embeddings.shape[0]
    if ds.labels.shape[0] != n:
        raise DatasetError(
            f"row count mismatch: {n} embedding rows vs {ds.labels.shape[0]} labels"
        )
    if ds.logits is not None:
        if ds.logits.ndim != 2 or ds.logits.shape[0] != n:
            raise DatasetError(
                f"row count mismatch: {n} embedding rows vs "
                f"{ds.logits.shape[0]} logit rows"
            )
        if ds.logits.shape[1] != ds.n_classes:
            raise DatasetError(
                f"logits have {ds.logits.shape[1]} columns, expected {ds.n_classes}"
            )
    if ds.n_classes < 2:
        raise DatasetError(f"need at least 2 classes, got {ds.n_classes}")
    spot = _first_nonfinite(ds.embeddings)
    if spot is not None:
        raise DatasetError(f"non-finite embedding value at row {spot[0]}, column {spot[1]}")
    if ds.logits is not None:
        spot = _first_nonfinite(ds.logits)
        if spot is not None:
            raise DatasetError(f"non-finite logit value at row {spot[0]}, column {spot[1]}")
    if n > 0:
        lo, hi = int(ds.labels.min()), int(ds.labels.max())
        if lo < 0 or hi >= ds.n_classes:
            bad = int(np.flatnonzero((ds.labels < 0) | (ds.labels >= ds.n_classes))[0])
            raise DatasetError(
                f"label {int(ds.labels[bad])} at row {bad} is outside [0, {ds.n_classes})"
            )
    if ds.split_tag not in _SPLIT_TAGS:
        raise DatasetError(f"split_tag must be one of {_SPLIT_TAGS}, got {ds.split_tag!r}")


# ---------------------------------------------------------------------------
# binary + sidecar format


def _paths_from(path: str | Path) -> tuple[Path, Path, Path]:
    p = Path(path)
    name = p.name
    if name.endswith(HEADER_SUFFIX):
        prefix = p.with_name(name[: -len(HEADER_SUFFIX)])
    else:
        prefix = p
    base = prefix.parent / prefix.name
    return (
        base.with_name(base.name + HEADER_SUFFIX),
        base.with_name(base.name + PAYLOAD_SUFFIX),
        base.with_name(base.name + LABELS_SUFFIX),
    )


def _read_header(header_path: Path) -> tuple[DatasetHeader, dict]:
    try:
        raw = json.loads(header_path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DatasetError(f"malformed header {header_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DatasetError(f"malformed header {header_path}: not a JSON object")
    try:
        header = DatasetHeader(
            n_samples=int(raw["n_samples"]),
            dim=int(raw["dim"]),
            n_classes=int(raw["n_classes"]),
            has_logits=bool(raw["has_logits"]),
            checksum=str(raw["checksum"]),
            byte_order=str(raw.get("byte_order", "little")),
            value_width=int(raw.get("value_width", 32)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed header {header_path}: {exc!r}") from exc
    if header.byte_order != "little":
        raise DatasetError(f"unsupported byte order {header.byte_order!r}")
    if header.value_width != 32:
        raise DatasetError(f"unsupported value width {header.value_width}")
    if header.n_samples < 0 or header.dim <= 0:
        raise DatasetError("header declares non-positive sizes")
    return header, raw


def _read_labels_csv(labels_path: Path, header: DatasetHeader) -> tuple[np.ndarray, dict[int, str]]:
    try:
        text = labels_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read labels file {labels_path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != ["index", "label", "class_name"]:
        raise DatasetError(f"{labels_path}: expected header 'index,label,class_name'")
    body = rows[1:]
    if len(body) != header.n_samples:
        raise DatasetError(
            f"{labels_path}: {len(body)} label rows, header declares {header.n_samples}"
        )
    labels = np.empty(header.n_samples, dtype=np.int64)
    names: dict[int, str] = {}
    for i, row in enumerate(body):
        if len(row) != 3:
            raise DatasetError(f"{labels_path}: row {i + 1} has {len(row)} fields, expected 3")
        try:
            idx, lab = int(row[0]), int(row[1])
        except ValueError as exc:
            raise DatasetError(f"{labels_path}: row {i + 1}: {exc}") from exc
        if idx != i:
            raise DatasetError(f"{labels_path}: row {i + 1} carries index {idx}, expected {i}")
        if not (0 <= lab < header.n_classes):
            raise DatasetError(
                f"{labels_path}: row {i + 1}: label {lab} outside [0, {header.n_classes})"
            )
        prior = names.setdefault(lab, row[2])
        if prior != row[2]:
            raise DatasetError(
                f"{labels_path}: row {i + 1}: class {lab} named {row[2]!r}, previously {prior!r}"
            )
        labels[i] = lab
    return labels, names


def _load_binary(path: str | Path, split: str | None) -> LabeledDataset:
    header_path, payload_path, labels_path = _paths_from(path)
    header, raw = _read_header(header_path)
    try:
        payload = payload_path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read payload {payload_path}: {exc}") from exc
    expected = header.payload_bytes()
    if len(payload) != expected:
        raise DatasetError(
            f"{payload_path}: payload is {len(payload)} bytes, header declares {expected}"
        )
    if _checksum(payload) != header.checksum:
        raise DatasetError(f"{payload_path}: checksum mismatch against header")
    flat = np.frombuffer(payload, dtype="<f4")
    emb_count = header.n_samples * header.dim
    embeddings = flat[:emb_count].reshape(header.n_samples, header.dim)
    logits = None
    if header.has_logits:
        logits = flat[emb_count:].reshape(header.n_samples, header.n_classes)

    labels, observed_names = _read_labels_csv(labels_path, header)
    stored_names = raw.get("class_names")
    if stored_names is not None:
        if len(stored_names) != header.n_classes:
            raise DatasetError(f"{header_path}: class_names length != n_classes")
        class_names = [str(s) for s in stored_names]
        for lab, name in observed_names.items():
            if class_names[lab] != name:
                raise DatasetError(
                    f"{labels_path}: class {lab} named {name!r}, header says {class_names[lab]!r}"
                )
    else:
        class_names = [observed_names.get(i, f"class_{i}") for i in range(header.n_classes)]

    split_tag = split if split is not None else str(raw.get("split", "train"))
    meta = raw.get("meta", {})
    if not isinstance(meta, dict):
        raise DatasetError(f"{header_path}: meta must be a JSON object")
    return LabeledDataset(
        embeddings=embeddings,
        labels=labels,
        class_names=class_names,
        logits=logits,
        split_tag=split_tag,
        meta=meta,
    )


def _load_csv(path: str | Path, split: str | None) -> LabeledDataset:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {p}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DatasetError(f"{p}: empty file")

    def is_float(s: str) -> bool:
        try:
            float(s)
            return True
        except ValueError:
            return False

    if not all(is_float(c) for c in rows[0][:-1]):
        rows = rows[1:]  # header row
    if not rows:
        raise DatasetError(f"{p}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise DatasetError(f"{p}: need at least one feature column plus a label column")

    features = np.empty((len(rows), width - 1), dtype=np.float32)
    raw_labels: list[str] = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(f"{p}: row {i + 1} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row[:-1]):
            try:
                v = float(cell)
            except ValueError as exc:
                raise DatasetError(f"{p}: row {i + 1}, column {j + 1}: {exc}") from exc
            if not math.isfinite(v):
                raise DatasetError(f"{p}: non-finite value in row {i + 1}, column {j + 1}")
            features[i, j] = v
        raw_labels.append(row[-1].strip())

    if all(s.lstrip("-").isdigit() for s in raw_labels):
        labels = np.array([int(s) for s in raw_labels], dtype=np.int64)
        if labels.min() < 0:
            bad = int(np.flatnonzero(labels < 0)[0])
            raise DatasetError(f"{p}: negative label in row {bad + 1}")
        class_names = [f"class_{i}" for i in range(int(labels.max()) + 1)]
    else:
        vocab = sorted(set(raw_labels))
        index = {name: i for i, name in enumerate(vocab)}
        labels = np.array([index[s] for s in raw_labels], dtype=np.int64)
        class_names = vocab
    return LabeledDataset(
        embeddings=features,
        labels=labels,
        class_names=class_names,
        split_tag=split if split is not None else "train",
    )


def load_dataset(path: str | Path, split: str | None = None) -> LabeledDataset:
    """Load and validate a dataset from a sidecar-header prefix or a CSV file.

    `path` may be the `.oodb.json` header, the bare prefix, or a `.csv`.
    `split` overrides the split tag recorded in (or absent from) the file.
    """
    if str(path).endswith(".csv"):
        return _load_csv(path, split)
    return _load_binary(path, split)


def write_dataset(ds: LabeledDataset, prefix: str | Path) -> tuple[Path, Path, Path]:
    """Write the three-file on-disk form; returns (header, payload, labels) paths."""
    header_path, payload_path, labels_path = _paths_from(prefix)
    parts = [np.ascontiguousarray(ds.embeddings, dtype="<f4").tobytes()]
    if ds.logits is not None:
        parts.append(np.ascontiguousarray(ds.logits, dtype="<f4").tobytes())
    payload = b"".join(parts)
    header = {
        "format": "oodb",
        "schema_version": 1,
        "n_samples": ds.n_samples,
        "dim": ds.dim,
        "n_classes": ds.n_classes,
        "has_logits": ds.has_logits,
        "byte_order": "little",
        "value_width": 32,
        "checksum": _checksum(payload),
        "split": ds.split_tag,
        "class_names": list(ds.class_names),
    }
    if ds.meta:
        header["meta"] = ds.meta
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header_path.write_text(json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    payload_path.write_bytes(payload)
    lines = ["index,label,class_name"]
    for i in range(ds.n_samples):
        lab = int(ds.labels[i])
        lines.append(f"{i},{lab},{ds.class_names[lab]}")
    labels_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return header_path, payload_path, labels_path


def validate_pair(train: LabeledDataset, test: LabeledDataset) -> None:
    """Check that two datasets can back one benchmark: same dim, same class list."""
    if train.dim != test.dim:
        raise DatasetError(f"dimension mismatch: train dim {train.dim} vs test dim {test.dim}")
    if train.class_names != test.class_names:
        raise DatasetError("class vocabulary mismatch between train and test")
