"""Writer for the oodbench on-disk dataset format.

Three files per dataset: a JSON sidecar header, a row-major little-endian
float32 payload (embeddings block, then logits block when present), and a
per-sample labels CSV. The header carries a 64-bit blake2b checksum of the
payload, which the consuming toolkit verifies on load.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def _checksum(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


def write_embedding_files(
    prefix: str | Path,
    embeddings: np.ndarray,
    labels: np.ndarray,
    class_names: list[str],
    split: str,
    logits: np.ndarray | None = None,
    meta: dict | None = None,
) -> tuple[Path, Path, Path]:
    """Write <prefix>.oodb.json / .oodb.bin / .labels.csv; returns the paths."""
    emb = np.ascontiguousarray(embeddings, dtype="<f4")
    lab = np.asarray(labels, dtype=np.int64).ravel()
    n, dim = emb.shape
    n_classes = len(class_names)
    if lab.shape[0] != n:
        raise ValueError(f"{n} embedding rows but {lab.shape[0]} labels")
    if n and (lab.min() < 0 or lab.max() >= n_classes):
        raise ValueError("label outside [0, n_classes)")
    parts = [emb.tobytes()]
    if logits is not None:
        logit_arr = np.ascontiguousarray(logits, dtype="<f4")
        if logit_arr.shape != (n, n_classes):
            raise ValueError(f"logits shape {logit_arr.shape} != ({n}, {n_classes})")
        parts.append(logit_arr.tobytes())
    payload = b"".join(parts)

    header = {
        "format": "oodb",
        "schema_version": 1,
        "n_samples": n,
        "dim": dim,
        "n_classes": n_classes,
        "has_logits": logits is not None,
        "byte_order": "little",
        "value_width": 32,
        "checksum": _checksum(payload),
        "split": split,
        "class_names": list(class_names),
    }
    if meta:
        header["meta"] = meta

    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    header_path = base.with_name(base.name + ".oodb.json")
    payload_path = base.with_name(base.name + ".oodb.bin")
    labels_path = base.with_name(base.name + ".labels.csv")
    header_path.write_text(json.dumps(header, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    payload_path.write_bytes(payload)
    lines = ["index,label,class_name"]
    for i, lab_i in enumerate(lab):
        lines.append(f"{i},{int(lab_i)},{class_names[int(lab_i)]}")
    labels_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return header_path, payload_path, labels_path
