"""MNIST-style IDX ingestion and train/test splitting.

Reads the classic big-endian IDX containers (raw or gzip-compressed),
filters to two label classes, and produces a seeded, disjoint train/test
split with pixels normalized to [0, 1].
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class DatasetError(ValueError):
    """Bad IDX file or an impossible split request."""


@dataclass
class DatasetSplit:
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray
    seed: int

    def class_counts(self) -> dict[str, dict[int, int]]:
        return {
            "train": {int(c): int(n) for c, n in zip(*np.unique(self.train_labels, return_counts=True))},
            "test": {int(c): int(n) for c, n in zip(*np.unique(self.test_labels, return_counts=True))},
        }


def _read_file(path) -> bytes:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _read_idx_images(path) -> np.ndarray:
    data = _read_file(path)
    if len(data) < 16:
        raise DatasetError(f"{path}: truncated IDX header")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise DatasetError(f"{path}: bad image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise DatasetError(f"{path}: truncated image data")
    pixels = np.frombuffer(data, dtype=np.uint8, count=count * rows * cols, offset=16)
    return pixels.reshape(count, rows, cols)


def _read_idx_labels(path) -> np.ndarray:
    data = _read_file(path)
    if len(data) < 8:
        raise DatasetError(f"{path}: truncated IDX header")
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise DatasetError(f"{path}: bad label magic 0x{magic:08x}")
    if len(data) < 8 + count:
        raise DatasetError(f"{path}: truncated label data")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=8)


def load_mnist_idx(
    image_path,
    label_path,
    classes: tuple[int, int] = (0, 1),
    n_train: int = 2000,
    n_test: int = 200,
    seed: int = 0,
) -> DatasetSplit:
    """Load IDX files and split into disjoint train/test subsets.

    Images with labels in ``classes`` are kept, shuffled with ``seed``, and
    relabeled to 0/1 (first class -> 0).  Pixels come back as float64 in
    [0, 1].
    """
    images = _read_idx_images(image_path)
    labels = _read_idx_labels(label_path)
    if images.shape[0] != labels.shape[0]:
        raise DatasetError(
            f"{images.shape[0]} images but {labels.shape[0]} labels"
        )
    keep = np.isin(labels, list(classes))
    images, labels = images[keep], labels[keep]
    if images.shape[0] < n_train + n_test:
        raise DatasetError(
            f"need {n_train + n_test} samples of classes {classes}, "
            f"found {images.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(images.shape[0])
    picked = order[: n_train + n_test]
    images = images[picked].astype(np.float64) / 255.0
    binary = (labels[picked] == classes[1]).astype(np.int64)
    return DatasetSplit(
        images[:n_train],
        binary[:n_train],
        images[n_train:],
        binary[n_train:],
        seed,
    )
