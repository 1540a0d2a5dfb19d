"""Reference intrinsic rewards: prediction error, RND, ensemble disagreement, AMA.

``PeCuriosity`` is forward-model curiosity computed directly on observations,
i.e. ICM's reward with an identity feature map (no inverse-dynamics encoder).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buffers import TransitionBuffer
from .explorer import Explorer, TrainConfig, mse_step
from .nn import Mlp


class PeCuriosity(Explorer):
    name = "pe"

    def __init__(self, obs_dim, n_actions, config: TrainConfig | None = None, seed=0):
        super().__init__(obs_dim, n_actions, config, seed)
        self.dynamics = self._new_model(obs_dim)
        self.opt = self._adam()
        self.buffer = TransitionBuffer(obs_dim, self.config.buffer_capacity)

    def observe(self, obs, action, next_obs) -> float:
        next_obs = self._check_next(next_obs)
        pred = self.dynamics.forward(self.encode(obs, action))
        self.buffer.add(obs, action, next_obs)
        return float(np.mean((next_obs - pred) ** 2))

    def update(self) -> None:
        self.updates += 1
        if len(self.buffer) == 0:
            return
        for _ in range(self.config.train_batches):
            obs, actions, next_obs = self.buffer.sample(self.config.batch_size, self.rng)
            mse_step(self.dynamics, self.opt, self.encode(obs, actions), next_obs)


@dataclass
class RndConfig(TrainConfig):
    embedding_dim: int = 64
    rnd_hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        super().__post_init__()
        self.rnd_hidden = tuple(self.rnd_hidden)


class RndExplorer(Explorer):
    """Distillation error of a trained predictor against a frozen random target."""

    name = "rnd"

    def __init__(self, obs_dim, n_actions, config: RndConfig | None = None, seed=0):
        super().__init__(obs_dim, n_actions, config if config is not None else RndConfig(), seed)
        cfg = self.config
        sizes = (obs_dim, *cfg.rnd_hidden, cfg.embedding_dim)
        self.target = Mlp.init(sizes, self.rng, cfg.hidden_activation, "identity")
        for p in self.target.params:
            p.setflags(write=False)
        self.predictor = Mlp.init(sizes, self.rng, cfg.hidden_activation, "identity")
        self.opt = self._adam()
        self.buffer = TransitionBuffer(obs_dim, cfg.buffer_capacity)

    def observe(self, obs, action, next_obs) -> float:
        next_obs = self._check_next(next_obs)
        self.encode(obs, action)  # validates shapes; the reward ignores (o, a)
        diff = self.target.forward(next_obs) - self.predictor.forward(next_obs)
        self.buffer.add(obs, action, next_obs)
        return float(np.sum(diff ** 2))

    def update(self) -> None:
        self.updates += 1
        if len(self.buffer) == 0:
            return
        for _ in range(self.config.train_batches):
            _, _, next_obs = self.buffer.sample(self.config.batch_size, self.rng)
            mse_step(self.predictor, self.opt, next_obs, self.target.forward(next_obs))


@dataclass
class EnsembleConfig(TrainConfig):
    members: int = 5

    def __post_init__(self):
        super().__post_init__()
        if self.members < 2:
            raise ValueError("an ensemble needs at least two members")


class EnsembleExplorer(Explorer):
    """Disagreement: mean over output dims of the across-member variance."""

    name = "ensemble"

    def __init__(self, obs_dim, n_actions, config: EnsembleConfig | None = None, seed=0):
        super().__init__(obs_dim, n_actions, config if config is not None else EnsembleConfig(), seed)
        self.models = [self._new_model(obs_dim) for _ in range(self.config.members)]
        self.opts = [self._adam() for _ in self.models]
        self.buffer = TransitionBuffer(obs_dim, self.config.buffer_capacity)

    def predictions(self, obs, action) -> np.ndarray:
        x = self.encode(obs, action)
        return np.stack([m.forward(x) for m in self.models])

    def observe(self, obs, action, next_obs) -> float:
        next_obs = self._check_next(next_obs)
        preds = self.predictions(obs, action)
        self.buffer.add(obs, action, next_obs)
        return float(np.mean(np.var(preds, axis=0)))

    def update(self) -> None:
        self.updates += 1
        if len(self.buffer) == 0:
            return
        for _ in range(self.config.train_batches):
            obs, actions, next_obs = self.buffer.sample(self.config.batch_size, self.rng)
            x = self.encode(obs, actions)
            for model, opt in zip(self.models, self.opts):
                mse_step(model, opt, x, next_obs)


@dataclass
class AmaConfig(TrainConfig):
    ama_lambda: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.ama_lambda < 0:
            raise ValueError("ama_lambda must be non-negative")


class AmaExplorer(Explorer):
    """Prediction error minus lambda times a learned aleatoric variance.

    One network with ``obs_dim + 1`` outputs: the first ``obs_dim`` are the
    mean head, the last is the log of a scalar variance. Trained with the
    Gaussian negative log-likelihood, so the variance head tracks the
    irreducible per-dimension squared error.
    """

    name = "ama"

    def __init__(self, obs_dim, n_actions, config: AmaConfig | None = None, seed=0):
        super().__init__(obs_dim, n_actions, config if config is not None else AmaConfig(), seed)
        self.model = self._new_model(obs_dim + 1, output_activation="identity")
        self.opt = self._adam()
        self.buffer = TransitionBuffer(obs_dim, self.config.buffer_capacity)

    def _heads(self, x):
        out = self.model.forward(x)
        mean = out[..., :self.obs_dim]
        if self.config.output_activation == "sigmoid":
            mean = 1.0 / (1.0 + np.exp(-mean))
        return mean, out[..., self.obs_dim]

    def mean_and_variance(self, obs, action) -> tuple[np.ndarray, float]:
        mean, log_var = self._heads(self.encode(obs, action))
        return mean, float(np.exp(log_var))

    def observe(self, obs, action, next_obs) -> float:
        next_obs = self._check_next(next_obs)
        mean, variance = self.mean_and_variance(obs, action)
        self.buffer.add(obs, action, next_obs)
        return float(np.mean((next_obs - mean) ** 2)) - self.config.ama_lambda * variance

    def update(self) -> None:
        self.updates += 1
        if len(self.buffer) == 0:
            return
        for _ in range(self.config.train_batches):
            obs, actions, next_obs = self.buffer.sample(self.config.batch_size, self.rng)
            x = self.encode(obs, actions)
            mean, log_var = self._heads(x)
            n = len(x)
            var = np.exp(log_var)
            diff = mean - next_obs
            sq = np.mean(diff ** 2, axis=1)
            # per-sample loss 0.5 * (log_var + sq / var), averaged over the batch
            d_mean = diff / (var[:, None] * self.obs_dim * n)
            if self.config.output_activation == "sigmoid":
                d_mean = d_mean * mean * (1.0 - mean)
            d_log_var = 0.5 * (1.0 - sq / var) / n
            grads = self.model.backward(x, np.concatenate([d_mean, d_log_var[:, None]], axis=1))
            self.opt.step(self.model.params, grads)
