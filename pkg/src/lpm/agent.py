"""Tabular Q-learning over latent state ids with epsilon-greedy exploration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class AgentConfig:
    beta: float = 1.0  # weight of the intrinsic reward
    alpha: float = 0.1
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_fraction: float = 0.2
    normalize_intrinsic: bool = False

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        for name in ("epsilon_start", "epsilon_end", "epsilon_decay_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


class QTable:
    """Dense Q-values; pairs never updated read as 0."""

    def __init__(self, n_states: int, n_actions: int, alpha: float = 0.1, gamma: float = 0.99,
                 epsilon: float = 0.0):
        self.values = np.zeros((n_states, n_actions))
        self.alpha = alpha
        self.gamma = gamma
        self.epsilon = epsilon

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    def __getitem__(self, key):
        return self.values[key]


def select_action(q: QTable, state_id: int, rng: np.random.Generator) -> int:
    """Uniform action with probability ``q.epsilon``, else greedy (lowest index on ties).

    Always consumes one uniform draw, plus one integer draw when exploring.
    """
    if rng.random() < q.epsilon:
        return int(rng.integers(q.n_actions))
    return int(np.argmax(q.values[state_id]))


def q_update(q: QTable, s: int, a: int, r_total: float, s_next: int, done: bool) -> float:
    """One Q-learning backup; returns the TD error."""
    if not math.isfinite(r_total):
        raise ValueError(f"non-finite reward {r_total!r}; update rejected")
    bootstrap = 0.0 if done else q.gamma * float(q.values[s_next].max())
    td = r_total + bootstrap - q.values[s, a]
    q.values[s, a] += q.alpha * td
    return float(td)


def epsilon_schedule(step: int, total_steps: int, config: AgentConfig) -> float:
    """Linear decay from start to end over the first ``decay_fraction`` of the run."""
    decay_steps = config.epsilon_decay_fraction * total_steps
    if decay_steps <= 0 or step >= decay_steps:
        return config.epsilon_end
    frac = step / decay_steps
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


class RunningStd:
    """Welford running standard deviation, used to rescale intrinsic rewards."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def push(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / self.n) if self.n > 1 else 1.0

    def normalize(self, x: float) -> float:
        self.push(x)
        s = self.std
        return x / s if s > 1e-8 else x
