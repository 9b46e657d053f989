import json

import numpy as np
import pytest

from oodbench.datamodel import (
    LabeledDataset,
    load_dataset,
    validate_pair,
    write_dataset,
)
from oodbench.errors import DatasetError


def small_dataset(with_logits=False, n=3, dim=2, n_classes=2):
    rng = np.random.default_rng(0)
    return LabeledDataset(
        embeddings=rng.normal(size=(n, dim)).astype(np.float32),
        labels=np.arange(n) % n_classes,
        class_names=[f"class_{i}" for i in range(n_classes)],
        logits=rng.normal(size=(n, n_classes)).astype(np.float32) if with_logits else None,
        split_tag="train",
    )


class TestContainerInvariants:
    def test_row_count_mismatch(self):
        with pytest.raises(DatasetError, match="row count"):
            LabeledDataset(
                embeddings=np.zeros((3, 2), np.float32),
                labels=np.zeros(2, np.int64),
                class_names=["a", "b"],
            )

    def test_label_out_of_range(self):
        with pytest.raises(DatasetError, match=r"label 2 at row 1"):
            LabeledDataset(
                embeddings=np.zeros((2, 2), np.float32),
                labels=np.array([0, 2]),
                class_names=["a", "b"],
            )

    def test_nonfinite_embedding_reports_position(self):
        emb = np.zeros((4, 3), np.float32)
        emb[2, 1] = np.nan
        with pytest.raises(DatasetError, match="row 2, column 1"):
            LabeledDataset(embeddings=emb, labels=np.zeros(4, np.int64), class_names=["a", "b"])

    def test_single_class_rejected(self):
        with pytest.raises(DatasetError, match="at least 2 classes"):
            LabeledDataset(
                embeddings=np.zeros((2, 2), np.float32),
                labels=np.zeros(2, np.int64),
                class_names=["only"],
            )


class TestBinaryRoundTrip:
    def test_minimal_file_loads(self, tmp_path):
        # 3 samples x 2 dims x 4 bytes = 24-byte payload
        ds = small_dataset()
        write_dataset(ds, tmp_path / "mini")
        assert (tmp_path / "mini.oodb.bin").stat().st_size == 24
        loaded = load_dataset(tmp_path / "mini.oodb.json")
        assert loaded.n_samples == 3
        np.testing.assert_array_equal(loaded.embeddings, ds.embeddings)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        assert loaded.class_names == ds.class_names
        assert loaded.split_tag == "train"

    def test_round_trip_is_byte_identical(self, tmp_path):
        ds = small_dataset(with_logits=True, n=7, dim=5, n_classes=3)
        ds.meta["note"] = {"k": 1}
        write_dataset(ds, tmp_path / "a")
        reloaded = load_dataset(tmp_path / "a")
        write_dataset(reloaded, tmp_path / "b")
        for suffix in (".oodb.json", ".oodb.bin", ".labels.csv"):
            assert (tmp_path / f"a{suffix}").read_bytes() == (
                tmp_path / f"b{suffix}"
            ).read_bytes()

    def test_prefix_and_header_paths_equivalent(self, tmp_path):
        write_dataset(small_dataset(), tmp_path / "x")
        a = load_dataset(tmp_path / "x")
        b = load_dataset(tmp_path / "x.oodb.json")
        np.testing.assert_array_equal(a.embeddings, b.embeddings)

    def test_truncated_payload(self, tmp_path):
        write_dataset(small_dataset(), tmp_path / "t")
        payload = (tmp_path / "t.oodb.bin").read_bytes()
        (tmp_path / "t.oodb.bin").write_bytes(payload[:-4])
        with pytest.raises(DatasetError, match="payload is 20 bytes"):
            load_dataset(tmp_path / "t")

    def test_payload_corruption_fails_checksum(self, tmp_path):
        write_dataset(small_dataset(), tmp_path / "c")
        payload = bytearray((tmp_path / "c.oodb.bin").read_bytes())
        payload[5] ^= 0xFF
        (tmp_path / "c.oodb.bin").write_bytes(bytes(payload))
        with pytest.raises(DatasetError, match="checksum"):
            load_dataset(tmp_path / "c")

    def test_label_csv_out_of_range(self, tmp_path):
        write_dataset(small_dataset(), tmp_path / "l")
        lines = (tmp_path / "l.labels.csv").read_text().splitlines()
        lines[2] = "1,9,class_1"
        (tmp_path / "l.labels.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError, match=r"label 9 outside"):
            load_dataset(tmp_path / "l")

    def test_header_single_byte_fuzz(self, tmp_path):
        """Any corrupted header must either fail to load or still satisfy
        every declared invariant against the real payload and labels."""
        write_dataset(small_dataset(with_logits=True), tmp_path / "f")
        header_path = tmp_path / "f.oodb.json"
        original = header_path.read_bytes()
        payload = (tmp_path / "f.oodb.bin").read_bytes()
        rng = np.random.default_rng(99)
        positions = rng.choice(len(original), size=min(120, len(original)), replace=False)
        for pos in positions:
            corrupted = bytearray(original)
            corrupted[pos] = (corrupted[pos] + int(rng.integers(1, 255))) % 256
            header_path.write_bytes(bytes(corrupted))
            try:
                ds = load_dataset(tmp_path / "f")
            except DatasetError:
                continue
            # loaded despite corruption: the stated invariants must still hold
            declared = json.loads(header_path.read_text())
            assert declared["n_samples"] == ds.n_samples
            assert declared["dim"] == ds.dim
            assert ds.embeddings.nbytes + (ds.logits.nbytes if ds.has_logits else 0) == len(payload)
            assert np.all(np.isfinite(ds.embeddings))
            assert ds.labels.max() < ds.n_classes
        header_path.write_bytes(original)
        load_dataset(tmp_path / "f")  # restored file still loads


class TestCsvIngestion:
    def test_basic_csv(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("f0,f1,label\n0.5,1.5,0\n2.5,3.5,1\n4.5,5.5,1\n")
        ds = load_dataset(p)
        assert ds.n_samples == 3 and ds.dim == 2 and ds.n_classes == 2
        assert ds.embeddings[1, 0] == pytest.approx(2.5)

    def test_string_labels(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("1.0,cat\n2.0,dog\n3.0,cat\n")
        ds = load_dataset(p)
        assert ds.class_names == ["cat", "dog"]
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])

    def test_nan_names_row(self, tmp_path):
        p = tmp_path / "n.csv"
        rows = ["1.0,2.0,0", "1.0,2.0,1", "3.0,4.0,0", "5.0,6.0,1", "nan,8.0,0", "9.0,9.0,1"]
        p.write_text("\n".join(rows) + "\n")
        with pytest.raises(DatasetError, match="row 5"):
            load_dataset(p)

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("1.0,2.0,0\n1.0,1\n")
        with pytest.raises(DatasetError, match="row 2"):
            load_dataset(p)


class TestValidatePair:
    def test_matching_pair_ok(self):
        validate_pair(small_dataset(n=4, dim=8), small_dataset(n=6, dim=8))

    def test_dim_mismatch(self):
        with pytest.raises(DatasetError, match="dimension mismatch"):
            validate_pair(small_dataset(dim=128), small_dataset(dim=64))

    def test_permuted_class_names_rejected(self):
        a = small_dataset()
        b = small_dataset()
        b.class_names = list(reversed(b.class_names))
        b.labels = (b.labels + 1) % 2  # keep labels valid
        with pytest.raises(DatasetError, match="class vocabulary"):
            validate_pair(a, b)
