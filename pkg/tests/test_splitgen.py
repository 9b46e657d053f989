import json

import numpy as np
import pytest

from oodbench.datamodel import LabeledDataset
from oodbench.errors import SplitError
from oodbench.splitgen import (
    generate_adjacent_split,
    generate_split_series,
    load_split,
    make_cross_dataset_split,
    ood_class_count,
    save_split,
    split_from_dict,
    split_to_dict,
)


def toy_pair(n_classes, n_train=None, n_test=None, dim=4, seed=0):
    """Balanced datasets covering every class in both splits."""
    rng = np.random.default_rng(seed)
    n_train = n_train or 4 * n_classes
    n_test = n_test or 2 * n_classes

    def make(n, tag):
        labels = np.arange(n) % n_classes
        return LabeledDataset(
            embeddings=rng.normal(size=(n, dim)).astype(np.float32),
            labels=labels,
            class_names=[f"class_{i}" for i in range(n_classes)],
            split_tag=tag,
        )

    return make(n_train, "train"), make(n_test, "test")


class TestOodClassCount:
    def test_exact_quarter(self):
        assert ood_class_count(8, 0.25) == 2

    def test_half_up_rounding(self):
        assert ood_class_count(7, 0.25) == 2  # 1.75 rounds up
        assert ood_class_count(6, 0.25) == 2  # 1.5 rounds up
        assert ood_class_count(196, 0.25) == 49

    def test_clamping(self):
        assert ood_class_count(2, 0.01) == 1
        assert ood_class_count(2, 0.99) == 1
        assert ood_class_count(4, 0.25) == 1


class TestAdjacentSplit:
    def test_eight_classes_quarter(self):
        train, test = toy_pair(8)
        split = generate_adjacent_split(train, test, 0.25, seed=5)
        assert len(split.ood_classes) == 2
        assert len(split.id_classes) == 6

    def test_same_seed_identical_different_seeds_vary(self):
        train, test = toy_pair(7)
        a = generate_adjacent_split(train, test, 0.25, seed=1)
        b = generate_adjacent_split(train, test, 0.25, seed=1)
        assert split_to_dict(a) == split_to_dict(b)
        others = {
            generate_adjacent_split(train, test, 0.25, seed=s).ood_classes
            for s in range(20)
        }
        assert len(others) > 1

    def test_large_vocab_partition_is_exhaustive(self):
        # Cars-shaped: 196 classes, 25% held out
        train, test = toy_pair(196, n_train=2 * 196, n_test=196 * 2)
        split = generate_adjacent_split(train, test, 0.25, seed=3)
        assert len(split.ood_classes) == 49
        # brute-force label scan: every test row in exactly one side
        claimed = np.zeros(test.n_samples, dtype=int)
        for idx in split.test_id_idx:
            claimed[idx] += 1
            assert test.labels[idx] in split.id_classes
        for idx in split.test_ood_idx:
            claimed[idx] += 1
            assert test.labels[idx] in split.ood_classes
        assert np.all(claimed == 1)

    def test_label_purity_fuzz(self):
        rng = np.random.default_rng(7)
        for case in range(1000):
            n_classes = int(rng.integers(2, 9))
            train, test = toy_pair(n_classes, seed=case)
            fraction = float(rng.uniform(0.1, 0.9))
            split = generate_adjacent_split(train, test, fraction, seed=case)
            id_set, ood_set = set(split.id_classes), set(split.ood_classes)
            assert id_set.isdisjoint(ood_set)
            assert id_set | ood_set == set(range(n_classes))
            assert all(train.labels[i] in id_set for i in split.train_id_idx)
            assert all(test.labels[i] in id_set for i in split.test_id_idx)
            assert all(test.labels[i] in ood_set for i in split.test_ood_idx)

    def test_serialized_split_is_byte_identical(self, tmp_path):
        train, test = toy_pair(5)
        for run in ("a", "b"):
            save_split(
                generate_adjacent_split(train, test, 0.25, seed=11), tmp_path / run
            )
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()

    def test_round_trip_serialization(self, tmp_path):
        train, test = toy_pair(5)
        split = generate_adjacent_split(train, test, 0.4, seed=2)
        save_split(split, tmp_path / "s.json")
        loaded = load_split(tmp_path / "s.json")
        assert split_to_dict(loaded) == split_to_dict(split)

    def test_invalid_fraction(self):
        train, test = toy_pair(4)
        with pytest.raises(SplitError):
            generate_adjacent_split(train, test, 0.0, seed=0)
        with pytest.raises(SplitError):
            generate_adjacent_split(train, test, 1.0, seed=0)


class TestSplitSeries:
    def test_three_seeds(self):
        train, test = toy_pair(8)
        splits = generate_split_series(train, test, 0.25, base_seed=10, n_repeats=3)
        assert [s.seed for s in splits] == [10, 11, 12]

    def test_singleton_equals_direct_call(self):
        train, test = toy_pair(8)
        series = generate_split_series(train, test, 0.25, base_seed=4, n_repeats=1)
        direct = generate_adjacent_split(train, test, 0.25, seed=4)
        assert split_to_dict(series[0]) == split_to_dict(direct)

    def test_clamp_on_four_classes(self):
        train, test = toy_pair(4)
        splits = generate_split_series(train, test, 0.25, base_seed=0, n_repeats=10)
        assert all(len(s.ood_classes) == 1 for s in splits)

    def test_zero_repeats_rejected(self):
        train, test = toy_pair(4)
        with pytest.raises(SplitError):
            generate_split_series(train, test, 0.25, base_seed=0, n_repeats=0)


class TestCrossDatasetSplit:
    def test_uses_every_ood_row(self):
        id_train, id_test = toy_pair(6, dim=16)
        ood_test, _ = toy_pair(10, dim=16, seed=9)
        split = make_cross_dataset_split(id_train, id_test, ood_test)
        assert split.kind == "cross_dataset"
        assert len(split.test_ood_idx) == ood_test.n_samples
        assert len(split.test_id_idx) == id_test.n_samples
        assert split.id_classes == tuple(range(6))

    def test_dim_mismatch(self):
        id_train, id_test = toy_pair(6, dim=16)
        ood_test, _ = toy_pair(10, dim=8, seed=9)
        with pytest.raises(SplitError, match="dim"):
            make_cross_dataset_split(id_train, id_test, ood_test)

    def test_malformed_record_rejected(self):
        with pytest.raises(SplitError):
            split_from_dict({"seed": 1})

    def test_json_fields(self, tmp_path):
        id_train, id_test = toy_pair(3, dim=4)
        ood_test, _ = toy_pair(4, dim=4, seed=1)
        split = make_cross_dataset_split(id_train, id_test, ood_test)
        save_split(split, tmp_path / "x.json")
        record = json.loads((tmp_path / "x.json").read_text())
        assert set(record) == {
            "seed", "kind", "id_classes", "ood_classes",
            "train_id_idx", "test_id_idx", "test_ood_idx",
        }
