import gzip
import struct

import numpy as np
import pytest

from tensorclus.data import (
    Dataset,
    load_dense,
    load_idx,
    save_dense,
    subsample_per_class,
    synth_clusters,
)
from tensorclus.exceptions import ConfigError, DataFormatError


def write_idx_pair(tmp_path, images, labels, gz=False, image_magic=0x803,
                   label_magic=0x801):
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    img_path = tmp_path / ("imgs.idx3-ubyte" + (".gz" if gz else ""))
    lbl_path = tmp_path / ("lbls.idx1-ubyte" + (".gz" if gz else ""))
    opener = gzip.open if gz else open
    with opener(img_path, "wb") as fh:
        fh.write(struct.pack(">IIII", image_magic, *images.shape))
        fh.write(images.tobytes())
    with opener(lbl_path, "wb") as fh:
        fh.write(struct.pack(">II", label_magic, labels.size))
        fh.write(labels.tobytes())
    return img_path, lbl_path


class TestIdxLoader:
    def test_small_pair(self, tmp_path):
        images = np.arange(12, dtype=np.uint8).reshape(3, 2, 2)
        img, lbl = write_idx_pair(tmp_path, images, [7, 1, 7])
        ds = load_idx(img, lbl)
        assert ds.tensor.shape == (2, 2, 3)
        np.testing.assert_array_equal(ds.labels, [7, 1, 7])

    def test_zero_image_is_zero_slice(self, tmp_path):
        images = np.zeros((2, 3, 3), dtype=np.uint8)
        images[1] = 9
        img, lbl = write_idx_pair(tmp_path, images, [0, 1])
        ds = load_idx(img, lbl)
        assert not ds.tensor[..., 0].any()

    def test_full_byte_scales_to_one(self, tmp_path):
        images = np.full((1, 2, 2), 255, dtype=np.uint8)
        img, lbl = write_idx_pair(tmp_path, images, [4])
        ds = load_idx(img, lbl)
        np.testing.assert_array_equal(ds.tensor[..., 0], np.ones((2, 2)))

    def test_gzip_transparent(self, tmp_path):
        images = np.arange(8, dtype=np.uint8).reshape(2, 2, 2)
        img, lbl = write_idx_pair(tmp_path, images, [0, 1], gz=True)
        ds = load_idx(img, lbl)
        assert ds.tensor.shape == (2, 2, 2)

    def test_bad_magic(self, tmp_path):
        images = np.zeros((1, 2, 2), dtype=np.uint8)
        img, lbl = write_idx_pair(tmp_path, images, [0], image_magic=0x999)
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)

    def test_count_mismatch(self, tmp_path):
        images = np.zeros((2, 2, 2), dtype=np.uint8)
        img, lbl = write_idx_pair(tmp_path, images, [0])
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)

    def test_truncated_payload(self, tmp_path):
        img = tmp_path / "broken.idx"
        with open(img, "wb") as fh:
            fh.write(struct.pack(">IIII", 0x803, 4, 5, 5))
            fh.write(b"\x00" * 10)
        _, lbl = write_idx_pair(tmp_path, np.zeros((4, 5, 5), dtype=np.uint8),
                                [0, 1, 2, 3])
        with pytest.raises(DataFormatError):
            load_idx(img, lbl)


class TestDenseContainer:
    def test_round_trip_with_labels_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        ds = Dataset(tensor=rng.standard_normal((3, 4, 5)),
                     labels=rng.integers(0, 3, size=5), name="x")
        path = tmp_path / "data.tcls"
        save_dense(path, ds)
        loaded = load_dense(path)
        np.testing.assert_array_equal(loaded.tensor, ds.tensor)
        np.testing.assert_array_equal(loaded.labels, ds.labels)

    def test_round_trip_without_labels(self, tmp_path):
        rng = np.random.default_rng(1)
        ds = Dataset(tensor=rng.standard_normal((2, 6)))
        path = tmp_path / "data.tcls"
        save_dense(path, ds)
        loaded = load_dense(path)
        np.testing.assert_array_equal(loaded.tensor, ds.tensor)
        assert loaded.labels is None

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "bad.tcls"
        with open(path, "wb") as fh:
            fh.write(b"TCLS")
            fh.write(struct.pack("<HH", 999, 1))
            fh.write(struct.pack("<Q", 1))
            fh.write(struct.pack("<d", 0.0))
            fh.write(struct.pack("<B", 0))
        with pytest.raises(DataFormatError):
            load_dense(path)

    def test_zero_order_rejected(self, tmp_path):
        path = tmp_path / "bad.tcls"
        with open(path, "wb") as fh:
            fh.write(b"TCLS")
            fh.write(struct.pack("<HH", 1, 0))
            fh.write(struct.pack("<B", 0))
        with pytest.raises(DataFormatError):
            load_dense(path)

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.tcls"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(DataFormatError):
            load_dense(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "bad.tcls"
        with open(path, "wb") as fh:
            fh.write(b"TCLS")
            fh.write(struct.pack("<HH", 1, 2))
            fh.write(struct.pack("<QQ", 3, 3))
            fh.write(b"\x00" * 8)  # 9 doubles expected
        with pytest.raises(DataFormatError):
            load_dense(path)

    def test_label_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.tcls"
        with open(path, "wb") as fh:
            fh.write(b"TCLS")
            fh.write(struct.pack("<HH", 1, 1))
            fh.write(struct.pack("<Q", 2))
            fh.write(struct.pack("<dd", 1.0, 2.0))
            fh.write(struct.pack("<B", 1))
            fh.write(struct.pack("<Q", 5))
            fh.write(struct.pack("<5q", 0, 0, 0, 0, 0))
        with pytest.raises(DataFormatError):
            load_dense(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        ds = Dataset(tensor=np.zeros((2, 2)))
        path = tmp_path / "data.tcls"
        save_dense(path, ds)
        with open(path, "ab") as fh:
            fh.write(b"x")
        with pytest.raises(DataFormatError):
            load_dense(path)


class TestSynthClusters:
    def test_zero_noise_gives_exact_centroids(self):
        ds = synth_clusters(2, 3, (4, 4), noise_sigma=0.0, separation=5.0, seed=0)
        assert ds.tensor.shape == (4, 4, 6)
        np.testing.assert_array_equal(ds.tensor[..., 0], ds.tensor[..., 1])
        np.testing.assert_array_equal(ds.labels, [0, 0, 0, 1, 1, 1])

    def test_deterministic(self):
        a = synth_clusters(3, 4, (3, 3), 0.2, 6.0, seed=7)
        b = synth_clusters(3, 4, (3, 3), 0.2, 6.0, seed=7)
        np.testing.assert_array_equal(a.tensor, b.tensor)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_nearest_centroid_separability(self):
        sep = 10.0
        ds = synth_clusters(3, 10, (8, 8), noise_sigma=sep / 20.0,
                            separation=sep, seed=1)
        # nearest-centroid oracle: classify each sample by the closest
        # per-cluster mean of the clean centroids
        clean = synth_clusters(3, 1, (8, 8), noise_sigma=0.0,
                               separation=sep, seed=1)
        centroids = [clean.tensor[..., k] for k in range(3)]
        predicted = [
            int(np.argmin([np.linalg.norm((ds.tensor[..., m] - c).ravel())
                           for c in centroids]))
            for m in range(ds.n_samples)
        ]
        np.testing.assert_array_equal(predicted, ds.labels)

    def test_pairwise_separation_enforced(self):
        ds = synth_clusters(4, 1, (6, 6), noise_sigma=0.0, separation=3.0, seed=2)
        for i in range(4):
            for j in range(i + 1, 4):
                d = np.linalg.norm((ds.tensor[..., i] - ds.tensor[..., j]).ravel())
                assert d >= 3.0

    def test_infeasible_separation(self):
        # scalar slices admit only two rank-one directions, so three
        # mutually separated centroids cannot exist
        with pytest.raises(ConfigError):
            synth_clusters(3, 2, (1, 1), noise_sigma=0.1, separation=1.0,
                           seed=0, max_attempts=50)

    def test_per_cluster_sizes(self):
        ds = synth_clusters(2, [2, 5], (3, 3), 0.1, 4.0, seed=3)
        assert ds.n_samples == 7
        assert int(np.sum(ds.labels == 1)) == 5


class TestSubsample:
    def test_counts_and_determinism(self):
        rng = np.random.default_rng(4)
        ds = Dataset(tensor=rng.standard_normal((3, 3, 30)),
                     labels=np.repeat([0, 1, 2], 10))
        sub = subsample_per_class(ds, 4, seed=0)
        assert sub.n_samples == 12
        np.testing.assert_array_equal(sub.labels, np.repeat([0, 1, 2], 4))
        again = subsample_per_class(ds, 4, seed=0)
        np.testing.assert_array_equal(sub.tensor, again.tensor)

    def test_class_filter(self):
        rng = np.random.default_rng(5)
        ds = Dataset(tensor=rng.standard_normal((2, 2, 20)),
                     labels=np.repeat([3, 5], 10))
        sub = subsample_per_class(ds, 2, classes=[5], seed=1)
        assert set(sub.labels.tolist()) == {5}

    def test_insufficient_class(self):
        ds = Dataset(tensor=np.zeros((2, 2, 4)), labels=np.array([0, 0, 0, 1]))
        with pytest.raises(ConfigError):
            subsample_per_class(ds, 3, seed=0)

    def test_requires_labels(self):
        ds = Dataset(tensor=np.zeros((2, 2, 4)))
        with pytest.raises(ConfigError):
            subsample_per_class(ds, 1)


class TestDataset:
    def test_label_length_checked(self):
        with pytest.raises(DataFormatError):
            Dataset(tensor=np.zeros((2, 2, 3)), labels=np.array([0, 1]))
