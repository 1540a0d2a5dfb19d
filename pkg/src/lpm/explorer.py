"""Common plumbing for intrinsic-reward producers."""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from .nn import Adam, Mlp, make_rng

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Settings shared by every explorer so comparisons use equal budgets.

    ``update_every`` is the update cycle N in environment steps.
    ``train_batches`` is the number of minibatches drawn from the transition
    buffer per update. ``input_offset`` is subtracted from observations
    before they enter a network (0.5 centres [0, 1] pixels); prediction
    targets stay in observation space.
    """

    learning_rate: float = 1e-3
    batch_size: int = 32
    update_every: int = 1
    train_batches: int = 1
    buffer_capacity: int | None = 10_000
    hidden: tuple[int, ...] = (128,)
    hidden_activation: str = "relu"
    output_activation: str = "identity"
    input_offset: float = 0.0

    def __post_init__(self):
        self.hidden = tuple(self.hidden)
        for name in ("batch_size", "update_every", "train_batches"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    @classmethod
    def from_dict(cls, values: dict):
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        return cls(**values)


def mse_step(model: Mlp, opt: Adam, x: np.ndarray, y: np.ndarray) -> float:
    """One Adam step on mean squared error over all output entries."""
    pred = model.forward(x)
    diff = pred - y
    grads = model.backward(x, 2.0 * diff / diff.size)
    opt.step(model.params, grads)
    return float(np.mean(diff ** 2))


class Explorer:
    """Base class: ``observe`` scores one transition, ``update`` trains.

    Callers report the end of each environment step with ``step_done``;
    it runs ``update`` whenever the step count is a multiple of the update
    cycle.
    """

    name = "explorer"
    warmup = 0

    def __init__(self, obs_dim: int, n_actions: int, config: TrainConfig | None = None, seed=0):
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        self.config = config if config is not None else TrainConfig()
        self.rng = make_rng(seed)
        self.t = 0
        self.updates = 0
        self._eye = np.eye(n_actions)

    @property
    def in_dim(self) -> int:
        return self.obs_dim + self.n_actions

    def _new_model(self, out_dim: int, hidden=None, output_activation=None) -> Mlp:
        cfg = self.config
        hidden = cfg.hidden if hidden is None else hidden
        return Mlp.init((self.in_dim, *hidden, out_dim), self.rng, cfg.hidden_activation,
                        cfg.output_activation if output_activation is None else output_activation)

    def _adam(self) -> Adam:
        return Adam(self.config.learning_rate)

    def encode(self, obs, actions) -> np.ndarray:
        """Observation(s) with one-hot action(s) appended."""
        obs = np.asarray(obs, dtype=np.float64)
        actions = np.asarray(actions)
        if obs.shape[-1] != self.obs_dim:
            raise ValueError(f"observation has dim {obs.shape[-1]}, expected {self.obs_dim}")
        if np.any((actions < 0) | (actions >= self.n_actions)):
            raise ValueError(f"action out of range for {self.n_actions} actions")
        return np.concatenate([obs - self.config.input_offset, self._eye[actions]], axis=-1)

    def _check_next(self, next_obs):
        next_obs = np.asarray(next_obs, dtype=np.float64)
        if next_obs.shape != (self.obs_dim,):
            raise ValueError(f"next observation has shape {next_obs.shape}, expected ({self.obs_dim},)")
        return next_obs

    def observe(self, obs, action: int, next_obs) -> float:
        raise NotImplementedError

    def update(self) -> None:
        raise NotImplementedError

    def step_done(self) -> bool:
        self.t += 1
        if self.t % self.config.update_every == 0:
            self.update()
            return True
        return False


class NullExplorer(Explorer):
    """Zero intrinsic reward; stands in for a policy with no exploration bonus."""

    name = "none"

    def observe(self, obs, action, next_obs) -> float:
        return 0.0

    def update(self) -> None:
        self.updates += 1
