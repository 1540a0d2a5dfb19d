"""Reader for the big-endian IDX format used by the MNIST distribution."""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .digits import DigitBank

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class IdxParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        return f.read()


def _header(data: bytes, expected_magic: int, n_dims: int):
    if len(data) < 4:
        raise IdxParseError("truncated header", len(data))
    (magic,) = struct.unpack_from(">i", data, 0)
    if magic != expected_magic:
        raise IdxParseError(f"unexpected magic 0x{magic:08x}, wanted 0x{expected_magic:08x}", 0)
    end = 4 + 4 * n_dims
    if len(data) < end:
        raise IdxParseError("truncated header", len(data))
    dims = struct.unpack_from(f">{n_dims}i", data, 4)
    if any(d < 0 for d in dims):
        raise IdxParseError(f"negative dimension in {dims}", 4)
    return dims, end


def read_idx_images(path) -> np.ndarray:
    """Raw uint8 array of shape (count, rows, cols)."""
    data = _read_bytes(path)
    (count, rows, cols), start = _header(data, IMAGES_MAGIC, 3)
    need = start + count * rows * cols
    if len(data) < need:
        raise IdxParseError(f"truncated image data: need {need} bytes, file has {len(data)}", len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count * rows * cols,
                         offset=start).reshape(count, rows, cols)


def read_idx_labels(path) -> np.ndarray:
    data = _read_bytes(path)
    (count,), start = _header(data, LABELS_MAGIC, 1)
    if len(data) < start + count:
        raise IdxParseError(f"truncated label data: need {start + count} bytes, file has {len(data)}",
                            len(data))
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=start)


def load_idx(images_path, labels_path, class_count: int = 10) -> DigitBank:
    """Group images by label into a DigitBank, pixels scaled to [0, 1]."""
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise IdxParseError(f"label/image count mismatch: {len(labels)} labels, {len(images)} images", 4)
    bad = labels >= class_count
    if bad.any():
        raise IdxParseError(f"label {int(labels[bad][0])} out of range", 8 + int(np.argmax(bad)))
    scaled = images.astype(np.float64) / 255.0
    return DigitBank([scaled[labels == k] for k in range(class_count)])


def write_idx(images_path, labels_path, images: np.ndarray, labels: np.ndarray) -> None:
    """Write uint8 images (count, rows, cols) and labels as uncompressed IDX."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">4i", IMAGES_MAGIC, *images.shape))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">2i", LABELS_MAGIC, len(labels)))
        f.write(labels.tobytes())
