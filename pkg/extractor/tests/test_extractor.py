import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from ood_extract import ExtractionError, ExtractorConfig, extract

# the primary toolkit is the consumer of the emitted files
from oodbench import load_dataset, validate_pair


def build_toy_dataset(root, n_train_per_class=6, n_test_per_class=4, side=40):
    """20 small PNGs across 2 classes with distinct color statistics."""
    rng = np.random.default_rng(0)
    for split, count in (("train", n_train_per_class), ("test", n_test_per_class)):
        for cls, base in (("reddish", (200, 40, 40)), ("bluish", (40, 40, 200))):
            d = root / split / cls
            d.mkdir(parents=True)
            for i in range(count):
                noise = rng.integers(0, 50, size=(side, side, 3))
                img = np.clip(np.array(base) + noise, 0, 255).astype(np.uint8)
                Image.fromarray(img).save(d / f"img_{i:03d}.png")
    return root


@pytest.fixture()
def toy_dataset(tmp_path):
    return build_toy_dataset(tmp_path / "toy")


def small_config(dataset, out, **overrides):
    base = dict(
        dataset_dir=str(dataset),
        output_prefix=str(out),
        backbone="resnet18",
        layer="penultimate",
        image_size=64,
        batch_size=8,
        weights="none",
    )
    base.update(overrides)
    return ExtractorConfig(**base)


class TestExtraction:
    def test_emitted_files_pass_primary_validation(self, toy_dataset, tmp_path):
        summary = extract(small_config(toy_dataset, tmp_path / "feat"))
        train = load_dataset(tmp_path / "feat_train")
        test = load_dataset(tmp_path / "feat_test")
        validate_pair(train, test)
        assert train.n_samples == 12 and test.n_samples == 8
        assert train.dim == 512  # resnet18 penultimate width
        assert train.class_names == ["bluish", "reddish"]
        assert not train.has_logits
        assert summary["n_skipped"] == 0

    def test_rerun_reproduces_identical_checksums(self, toy_dataset, tmp_path):
        extract(small_config(toy_dataset, tmp_path / "a"))
        extract(small_config(toy_dataset, tmp_path / "b"))
        for split in ("train", "test"):
            header_a = json.loads((tmp_path / f"a_{split}.oodb.json").read_text())
            header_b = json.loads((tmp_path / f"b_{split}.oodb.json").read_text())
            assert header_a["checksum"] == header_b["checksum"]
            assert (tmp_path / f"a_{split}.oodb.bin").read_bytes() == (
                tmp_path / f"b_{split}.oodb.bin"
            ).read_bytes()

    def test_row_order_is_lexicographic(self, toy_dataset, tmp_path):
        extract(small_config(toy_dataset, tmp_path / "feat"))
        train = load_dataset(tmp_path / "feat_train")
        # classes sorted: bluish (0) then reddish (1), files sorted within
        np.testing.assert_array_equal(train.labels, [0] * 6 + [1] * 6)

    def test_feeds_run_benchmark_without_error(self, toy_dataset, tmp_path):
        extract(small_config(toy_dataset, tmp_path / "feat"))
        run_config = {
            "train_path": str(tmp_path / "feat_train"),
            "test_path": str(tmp_path / "feat_test"),
            "split": {"kind": "adjacent", "ood_fraction": 0.5, "base_seed": 0, "n_repeats": 2},
            "scorers": [{"method": "knn"}, {"method": "mahalanobis"}],
            "output_dir": str(tmp_path / "out"),
        }
        (tmp_path / "run.json").write_text(json.dumps(run_config))
        result = subprocess.run(
            [sys.executable, "-m", "oodbench", "eval", "--config", str(tmp_path / "run.json")],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(report["results"]) == 2

    def test_logits_layer_matches_head_width(self, toy_dataset, tmp_path):
        extract(small_config(toy_dataset, tmp_path / "lg", layer="logits"))
        train = load_dataset(tmp_path / "lg_train")
        assert train.has_logits
        assert train.n_classes == 1000  # resnet18 classification head
        assert train.logits.shape == (12, 1000)
        assert train.class_names[:2] == ["bluish", "reddish"]
        assert train.class_names[2] == "logit_2"

    def test_unreadable_image_is_skipped_with_manifest(self, toy_dataset, tmp_path):
        bad = toy_dataset / "train" / "reddish" / "img_000.png"
        bad.write_bytes(b"not an image at all")
        summary = extract(small_config(toy_dataset, tmp_path / "sk"))
        assert summary["n_skipped"] == 1
        manifest = json.loads((tmp_path / "sk.skips.json").read_text())
        assert manifest["train"][0]["path"].endswith("img_000.png")
        train = load_dataset(tmp_path / "sk_train")
        assert train.n_samples == 11

    def test_projection_head_unavailable(self, toy_dataset, tmp_path):
        with pytest.raises(ExtractionError, match="projection head"):
            extract(small_config(toy_dataset, tmp_path / "p", layer="projection_head"))

    def test_single_class_rejected(self, tmp_path):
        root = tmp_path / "one"
        for split in ("train", "test"):
            d = root / split / "only"
            d.mkdir(parents=True)
            Image.fromarray(np.zeros((16, 16, 3), np.uint8)).save(d / "x.png")
        with pytest.raises(ExtractionError, match="2 class folders"):
            extract(small_config(root, tmp_path / "o"))

    def test_cli_round_trip(self, toy_dataset, tmp_path):
        result = subprocess.run(
            [
                sys.executable, "-m", "ood_extract.cli",
                "--dataset", str(toy_dataset), "--backbone", "resnet18",
                "--layer", "penultimate", "--size", "64",
                "--weights", "none", "--out", str(tmp_path / "cli"),
            ],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        summary = json.loads(result.stdout)
        assert summary["splits"]["train"]["n_samples"] == 12
        load_dataset(tmp_path / "cli_test")
