from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import make_rng

IMAGE_SIDE = 28


@dataclass
class DigitBank:
    """Per-class lists of square grayscale images with pixels in [0, 1]."""

    images: list[np.ndarray]  # images[k] has shape (n_k, side, side)

    def __post_init__(self):
        for k, imgs in enumerate(self.images):
            if len(imgs) == 0:
                raise ValueError(f"class {k} has no images")
            if imgs.min() < 0.0 or imgs.max() > 1.0:
                raise ValueError(f"class {k} has pixels outside [0, 1]")

    @property
    def class_count(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int]:
        return self.images[0].shape[1:]

    @property
    def dim(self) -> int:
        h, w = self.image_shape
        return h * w

    def anchor(self, label: int) -> np.ndarray:
        """The first image of a class, flattened."""
        return self.images[label][0].reshape(-1)

    def sample(self, label: int, rng: np.random.Generator) -> np.ndarray:
        imgs = self.images[label]
        return imgs[rng.integers(len(imgs))].reshape(-1)

    def counts(self) -> list[int]:
        return [len(imgs) for imgs in self.images]


def synthetic_digit_bank(seed: int = 0, side: int = IMAGE_SIDE) -> DigitBank:
    """Ten procedural stand-ins for digit classes, one image each.

    Class k is a sinusoidal grating with its own orientation and spatial
    frequency; the seed only moves the phases. Gratings of different
    orientation are close to orthogonal, so every pair of classes differs
    substantially.
    """
    rng = make_rng(seed)
    yy, xx = np.mgrid[0:side, 0:side] / side
    images = []
    for k in range(10):
        angle = np.pi * k / 10
        freq = 2.0 + (k % 3)
        phase = rng.uniform(0, 2 * np.pi)
        u = xx * np.cos(angle) + yy * np.sin(angle)
        img = 0.5 + 0.5 * np.sin(2 * np.pi * freq * u + phase)
        images.append(np.clip(img, 0.0, 1.0)[None])
    return DigitBank(images)
