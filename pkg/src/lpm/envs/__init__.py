from .base import NoiseMode, StepResult, write_pgm
from .digits import DigitBank, synthetic_digit_bank
from .idx import IdxParseError, load_idx, read_idx_images, read_idx_labels, write_idx
from .maze import ACTION_NAMES, FORWARD, IDLE, TURN_LEFT, TURN_RIGHT, GridMazeEnv
from .paired import VISIT_DETERMINISTIC, VISIT_STOCHASTIC, PairedTransitionEnv

__all__ = [
    "ACTION_NAMES", "DigitBank", "FORWARD", "GridMazeEnv", "IDLE", "IdxParseError", "NoiseMode",
    "PairedTransitionEnv", "StepResult", "TURN_LEFT", "TURN_RIGHT", "VISIT_DETERMINISTIC",
    "VISIT_STOCHASTIC", "load_idx", "read_idx_images", "read_idx_labels", "synthetic_digit_bank",
    "write_idx", "write_pgm",
]
