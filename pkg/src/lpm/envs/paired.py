"""Noisy-MNIST style environment with one learnable and one unlearnable transition.

Choosing ``VISIT_DETERMINISTIC`` starts from the class-0 anchor image and
lands on that same image again. Choosing ``VISIT_STOCHASTIC`` starts from
the class-1 anchor and lands on a uniformly drawn image of class 2-9.
Every step ends the episode.
"""
from __future__ import annotations

import numpy as np

from ..nn import make_rng
from .base import StepResult
from .digits import DigitBank

VISIT_DETERMINISTIC = 0
VISIT_STOCHASTIC = 1
NOISE_CLASSES = tuple(range(2, 10))


class PairedTransitionEnv:
    action_count = 2
    state_count = 10  # latent id = class label of the shown image

    def __init__(self, bank: DigitBank, seed: int = 0):
        if bank.class_count != 10:
            raise ValueError("paired environment needs a 10-class bank")
        self.bank = bank
        self.rng = make_rng(seed)
        self._ready = False

    @property
    def obs_dim(self) -> int:
        return self.bank.dim

    def reset(self, seed: int | None = None, branch: int = VISIT_DETERMINISTIC) -> StepResult:
        if seed is not None:
            self.rng = make_rng(seed)
        self._check_action(branch)
        self._ready = True
        return StepResult(self.bank.anchor(branch), 0.0, False, branch)

    def start_observation(self, action: int) -> np.ndarray:
        self._check_action(action)
        return self.bank.anchor(action)

    def step(self, action: int) -> StepResult:
        if not self._ready:
            raise RuntimeError("call reset() before step()")
        self._check_action(action)
        if action == VISIT_DETERMINISTIC:
            label = 0
            obs = self.bank.anchor(0)
        else:
            label = NOISE_CLASSES[self.rng.integers(len(NOISE_CLASSES))]
            obs = self.bank.sample(label, self.rng)
        return StepResult(obs, 0.0, True, label)

    def transition(self, action: int) -> tuple[np.ndarray, np.ndarray, int]:
        """One (o, o_next, label) sample for the chosen branch."""
        start = self.reset(branch=action).observation
        result = self.step(action)
        return start, result.observation, result.latent_state_id

    def _check_action(self, action):
        if not 0 <= action < self.action_count:
            raise ValueError(f"invalid action {action}; expected 0..{self.action_count - 1}")
