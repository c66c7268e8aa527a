"""Dataset ingestion, container format, and synthetic data generation.

Datasets hold a dense tensor with samples stacked on the last mode plus
optional integer labels of matching length.

Two on-disk formats are supported:

* IDX (the MNIST image/label files): big-endian magic, dimension sizes,
  unsigned-byte payload. ``.gz`` files are decompressed transparently.
* The native "TCLS" container::

      bytes 0-3   magic b"TCLS"
      u16 LE      version (currently 1)
      u16 LE      tensor order N (>= 1)
      N x u64 LE  shape
      f64 LE      payload, row-major, prod(shape) values
      u8          label flag (0 or 1)
      u64 LE      label count (= last-mode extent)   } only when flag = 1
      i64 LE      labels                             }

  Round trips through :func:`save_dense` / :func:`load_dense` are
  bit-exact.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataFormatError

__all__ = [
    "Dataset",
    "load_idx",
    "load_dense",
    "save_dense",
    "synth_clusters",
    "subsample_per_class",
]

TCLS_MAGIC = b"TCLS"
TCLS_VERSION = 1

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    tensor: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.tensor = np.asarray(self.tensor, dtype=np.float64)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.tensor.shape[-1],):
                raise DataFormatError(
                    f"{self.labels.size} labels for {self.tensor.shape[-1]} samples"
                )

    @property
    def n_samples(self) -> int:
        return self.tensor.shape[-1]


def _open_binary(path):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, nbytes, what):
    buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise DataFormatError(f"truncated file while reading {what}")
    return buf


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label pair; pixels are scaled to [0, 1].

    Returns a tensor of shape (rows, cols, M) with the samples on the
    last mode.
    """
    with _open_binary(images_path) as fh:
        magic, n_images, n_rows, n_cols = struct.unpack(
            ">IIII", _read_exact(fh, 16, "image header")
        )
        if magic != IDX_IMAGE_MAGIC:
            raise DataFormatError(
                f"bad image magic 0x{magic:08x} in {images_path}"
            )
        raw = _read_exact(fh, n_images * n_rows * n_cols, "image payload")
        images = np.frombuffer(raw, dtype=np.uint8).reshape(
            n_images, n_rows, n_cols
        )

    with _open_binary(labels_path) as fh:
        magic, n_labels = struct.unpack(
            ">II", _read_exact(fh, 8, "label header")
        )
        if magic != IDX_LABEL_MAGIC:
            raise DataFormatError(
                f"bad label magic 0x{magic:08x} in {labels_path}"
            )
        labels = np.frombuffer(
            _read_exact(fh, n_labels, "label payload"), dtype=np.uint8
        )

    if n_labels != n_images:
        raise DataFormatError(
            f"{n_images} images but {n_labels} labels"
        )
    tensor = np.moveaxis(images.astype(np.float64) / 255.0, 0, -1)
    return Dataset(tensor=tensor, labels=labels.astype(np.int64),
                   name=str(images_path))


def save_dense(path, dataset: Dataset) -> None:
    """Write a dataset to the TCLS container."""
    tensor = np.ascontiguousarray(dataset.tensor, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(TCLS_MAGIC)
        fh.write(struct.pack("<HH", TCLS_VERSION, tensor.ndim))
        fh.write(struct.pack(f"<{tensor.ndim}Q", *tensor.shape))
        fh.write(tensor.tobytes(order="C"))
        if dataset.labels is None:
            fh.write(struct.pack("<B", 0))
        else:
            fh.write(struct.pack("<B", 1))
            fh.write(struct.pack("<Q", dataset.labels.size))
            fh.write(dataset.labels.astype("<i8").tobytes())


def load_dense(path) -> Dataset:
    """Read a dataset from the TCLS container (bit-exact with save_dense)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != TCLS_MAGIC:
            raise DataFormatError(f"{path} is not a TCLS file")
        version, order = struct.unpack("<HH", _read_exact(fh, 4, "header"))
        if version != TCLS_VERSION:
            raise DataFormatError(f"unsupported TCLS version {version}")
        if order < 1:
            raise DataFormatError("tensor order must be at least 1")
        shape = struct.unpack(
            f"<{order}Q", _read_exact(fh, 8 * order, "shape")
        )
        count = int(np.prod(shape, dtype=np.int64))
        payload = _read_exact(fh, 8 * count, "payload")
        tensor = np.frombuffer(payload, dtype="<f8").reshape(shape)
        flag = struct.unpack("<B", _read_exact(fh, 1, "label flag"))[0]
        labels = None
        if flag == 1:
            n = struct.unpack("<Q", _read_exact(fh, 8, "label count"))[0]
            if n != shape[-1]:
                raise DataFormatError(
                    f"{n} labels for last-mode extent {shape[-1]}"
                )
            labels = np.frombuffer(
                _read_exact(fh, 8 * n, "labels"), dtype="<i8"
            ).astype(np.int64)
        elif flag != 0:
            raise DataFormatError(f"invalid label flag {flag}")
        if fh.read(1):
            raise DataFormatError("trailing bytes after TCLS payload")
    return Dataset(tensor=tensor.copy(), labels=labels, name=str(path))


def _random_low_rank_slice(rng, shape, rank) -> np.ndarray:
    """Unit-norm tensor whose every unfolding has rank at most ``rank``."""
    core_shape = tuple(min(rank, s) for s in shape)
    core = rng.standard_normal(core_shape)
    out = core
    for n, s in enumerate(shape):
        Q, _ = np.linalg.qr(rng.standard_normal((s, core_shape[n])))
        out = np.tensordot(Q, out, axes=([1], [n]))
        out = np.moveaxis(out, 0, n)
    return out / np.linalg.norm(out.ravel())


def synth_clusters(n_clusters, per_cluster, slice_shape, noise_sigma,
                   separation, seed=0, centroid_rank=1,
                   max_attempts=1000) -> Dataset:
    """Generate labeled samples around well-separated low-rank centroids.

    Each centroid is a random unit-norm tensor of multilinear rank
    ``centroid_rank`` scaled by ``separation``; centroid draws are
    rejected until all pairwise distances reach ``separation``. Samples
    add elementwise Gaussian noise of scale ``noise_sigma``.
    """
    if n_clusters < 1:
        raise ConfigError("n_clusters must be at least 1")
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be nonnegative")
    if separation < 0:
        raise ConfigError("separation must be nonnegative")
    slice_shape = tuple(int(s) for s in slice_shape)
    if np.isscalar(per_cluster):
        sizes = [int(per_cluster)] * n_clusters
    else:
        sizes = [int(c) for c in per_cluster]
        if len(sizes) != n_clusters:
            raise ConfigError(
                f"per_cluster needs {n_clusters} entries, got {len(sizes)}"
            )
    if any(c < 1 for c in sizes):
        raise ConfigError("every cluster needs at least one sample")

    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        centroids = [
            separation * _random_low_rank_slice(rng, slice_shape, centroid_rank)
            for _ in range(n_clusters)
        ]
        ok = all(
            np.linalg.norm((centroids[i] - centroids[j]).ravel()) >= separation
            for i in range(n_clusters) for j in range(i + 1, n_clusters)
        )
        if ok:
            break
    else:
        raise ConfigError(
            f"could not draw centroids {separation} apart "
            f"in {max_attempts} attempts"
        )

    slices = []
    labels = []
    for k, size in enumerate(sizes):
        for _ in range(size):
            slices.append(centroids[k] + noise_sigma * rng.standard_normal(slice_shape))
            labels.append(k)
    tensor = np.stack(slices, axis=len(slice_shape))
    return Dataset(tensor=tensor, labels=np.asarray(labels, dtype=np.int64),
                   name=f"synth-k{n_clusters}-seed{seed}")


def subsample_per_class(dataset: Dataset, per_class, classes=None,
                        seed=0) -> Dataset:
    """Seeded draw of ``per_class`` samples from each requested class."""
    if dataset.labels is None:
        raise ConfigError("subsampling by class requires labels")
    rng = np.random.default_rng(seed)
    if classes is None:
        classes = np.unique(dataset.labels)
    picked = []
    for c in classes:
        idx = np.flatnonzero(dataset.labels == c)
        if idx.size < per_class:
            raise ConfigError(
                f"class {c} has {idx.size} samples, need {per_class}"
            )
        picked.append(rng.choice(idx, size=per_class, replace=False))
    order = np.concatenate(picked)
    return Dataset(
        tensor=dataset.tensor[..., order],
        labels=dataset.labels[order],
        name=f"{dataset.name}[subsampled]",
    )
