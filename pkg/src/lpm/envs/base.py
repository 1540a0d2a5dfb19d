from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class NoiseMode(str, Enum):
    NONE = "none"
    STATE_NOISE = "state_noise"
    ACTION_NOISE = "action_noise"


@dataclass
class StepResult:
    observation: np.ndarray
    extrinsic_reward: float
    done: bool
    latent_state_id: int


def write_pgm(path, observation, shape) -> None:
    """Dump a [0, 1] observation as a binary (P5) PGM image."""
    img = np.clip(np.asarray(observation).reshape(shape), 0.0, 1.0)
    pixels = np.round(img * 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{shape[1]} {shape[0]}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())
