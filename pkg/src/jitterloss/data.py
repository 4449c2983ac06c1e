"""Datasets: MNIST-family IDX files and synthetic Gaussian blobs."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .samplers import STREAM_DATA, RngStream

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


class IdxError(ValueError):
    pass


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.features.ndim != 2:
            raise ValueError("features must be 2-D")
        n = self.features.shape[0]
        if n < 1 or self.labels.shape != (n,):
            raise ValueError(f"{n} feature rows but labels of shape {self.labels.shape}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        if not np.isfinite(self.features).all():
            raise ValueError("features must be finite")

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class IdxHeader:
    magic: int
    dims: tuple


def parse_idx(buf: bytes, expect_magic: int | None = None):
    """Parse IDX bytes into ``(header, uint8 array)``."""
    if len(buf) < 4:
        raise TruncatedFileError(f"IDX needs a 4-byte magic, got {len(buf)} bytes")
    (magic,) = struct.unpack(">i", buf[:4])
    ndim = {IDX_IMAGES: 3, IDX_LABELS: 1}.get(magic)
    if ndim is None or (expect_magic is not None and magic != expect_magic):
        raise BadMagicError(f"bad IDX magic 0x{magic:08x}")
    end = 4 + 4 * ndim
    if len(buf) < end:
        raise TruncatedFileError("IDX header truncated")
    dims = struct.unpack(f">{ndim}i", buf[4:end])
    size = int(np.prod(dims))
    if len(buf) < end + size:
        raise TruncatedFileError(f"IDX payload has {len(buf) - end} bytes, header promises {size}")
    data = np.frombuffer(buf, dtype=np.uint8, count=size, offset=end).reshape(dims)
    return IdxHeader(magic, dims), data


def write_idx(array: np.ndarray) -> bytes:
    """Encode a uint8 array (3-D images or 1-D labels) as IDX bytes."""
    array = np.asarray(array)
    magic = {3: IDX_IMAGES, 1: IDX_LABELS}[array.ndim]
    head = struct.pack(f">i{array.ndim}i", magic, *array.shape)
    return head + np.ascontiguousarray(array, dtype=np.uint8).tobytes()


def load_idx(path_images, path_labels, num_classes: int = 10) -> Dataset:
    _, images = parse_idx(Path(path_images).read_bytes(), IDX_IMAGES)
    _, labels = parse_idx(Path(path_labels).read_bytes(), IDX_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    features = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(features, labels.astype(np.int64), num_classes)


def synthetic_blobs(n, d, num_classes, class_separation, label_noise_rate, rng: RngStream) -> Dataset:
    """Unit-variance Gaussian blobs centred at ``class_separation * e_k``.

    A ``label_noise_rate`` fraction of labels (rounded) is moved to a different
    class chosen uniformly.
    """
    if num_classes < 2 or n < num_classes:
        raise ValueError("need num_classes >= 2 and n >= num_classes")
    if d < num_classes:
        raise ValueError("d must be >= num_classes to place centres on coordinate axes")
    if not 0 <= label_noise_rate < 1:
        raise ValueError("label_noise_rate must lie in [0, 1)")
    clean = np.arange(n) % num_classes
    clean = clean[rng.permutation(n)]
    centres = np.zeros((num_classes, d))
    centres[np.arange(num_classes), np.arange(num_classes)] = class_separation
    features = centres[clean] + rng.normal(size=(n, d))
    labels = clean.copy()
    n_flip = int(round(label_noise_rate * n))
    if n_flip:
        flip = rng.permutation(n)[:n_flip]
        shift = rng.gen.integers(1, num_classes, size=n_flip)
        labels[flip] = (clean[flip] + shift) % num_classes
    return Dataset(features, labels.astype(np.int64), num_classes)


def subset(dataset: Dataset, n: int, rng: RngStream) -> Dataset:
    if not 1 <= n <= len(dataset):
        raise ValueError(f"cannot take {n} rows from a dataset of {len(dataset)}")
    return dataset.take(rng.permutation(len(dataset))[:n])


def build_datasets(cfg: dict, seed: int) -> tuple[Dataset, Dataset]:
    """Train and test sets from a normalized ``dataset`` config block."""
    rng = RngStream(cfg.get("data_seed", seed), STREAM_DATA)
    if cfg["kind"] == "synthetic":
        args = (cfg["d"], cfg["num_classes"], cfg["class_separation"])
        train = synthetic_blobs(cfg["n_train"], *args, cfg["label_noise_rate"], rng)
        test = synthetic_blobs(cfg["n_test"], *args, 0.0, rng)
    else:
        train = load_idx(cfg["train_images"], cfg["train_labels"], cfg["num_classes"])
        test = load_idx(cfg["test_images"], cfg["test_labels"], cfg["num_classes"])
    if cfg.get("subset_n"):
        train = subset(train, cfg["subset_n"], rng)
    if cfg.get("test_subset_n"):
        test = subset(test, cfg["test_subset_n"], rng)
    return train, test
