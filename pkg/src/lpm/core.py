"""Learning-progress intrinsic reward with a dynamics model and an error model.

The dynamics model f maps (o, a) to a predicted next observation. Each
observed transition is scored by its log-MSE ``eps`` under the current f
and recorded twice: (o, a, o_next) goes to the transition buffer used to
fit f, and (o, a, eps) goes to a fixed-size error queue. The error model g
is regressed onto the queued ``eps`` values, which were all produced by
earlier versions of f, so g(o, a) estimates the expected error of the
previous dynamics model. The reward is ``g(o, a) - eps``: positive when f
has improved on this kind of transition, near zero when it cannot improve
(a learned transition, or pure noise).
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass

import numpy as np

from .buffers import ErrorQueue, TransitionBuffer
from .explorer import Explorer, TrainConfig, mse_step
from .nn import DEFAULT_MSE_FLOOR, Adam, Mlp, log_mse

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class LpmConfig(TrainConfig):
    queue_size: int = 100
    epochs_per_update: int = 1
    mse_floor: float = DEFAULT_MSE_FLOOR
    error_hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        super().__post_init__()
        self.error_hidden = tuple(self.error_hidden)
        if self.queue_size < 1 or self.epochs_per_update < 1:
            raise ValueError("queue_size and epochs_per_update must be positive")
        if not self.mse_floor > 0:
            raise ValueError("mse_floor must be positive")


def combined_reward(r_ext: float, r_int: float, beta: float) -> float:
    return r_ext + beta * r_int


class LpmExplorer(Explorer):
    name = "lpm"

    def __init__(self, obs_dim: int, n_actions: int, config: LpmConfig | None = None, seed=0):
        super().__init__(obs_dim, n_actions, config if config is not None else LpmConfig(), seed)
        cfg = self.config
        self.dynamics = self._new_model(obs_dim)
        self.error_model = self._new_model(1, hidden=cfg.error_hidden, output_activation="identity")
        self.dynamics_opt = self._adam()
        self.error_opt = self._adam()
        self.buffer = TransitionBuffer(obs_dim, cfg.buffer_capacity)
        self.queue = ErrorQueue(obs_dim, cfg.queue_size)
        self.tau = 0

    @property
    def warmup(self) -> int:
        return self.config.queue_size

    def prediction_error(self, obs, action: int, next_obs) -> float:
        """log-MSE of the current dynamics model on one transition."""
        x = self.encode(obs, action)
        return log_mse(self._check_next(next_obs), self.dynamics.forward(x), self.config.mse_floor)

    def expected_error(self, obs, action: int) -> float:
        return float(self.error_model.forward(self.encode(obs, action))[0])

    def observe(self, obs, action: int, next_obs) -> float:
        next_obs = self._check_next(next_obs)
        x = self.encode(obs, action)
        eps = log_mse(next_obs, self.dynamics.forward(x), self.config.mse_floor)
        # gate on fullness before this push
        reward = float(self.error_model.forward(x)[0]) - eps if self.queue.full else 0.0
        self.buffer.add(obs, action, next_obs)
        self.queue.add(obs, action, eps, self.tau)
        return reward

    def update(self) -> None:
        """One model-update step: fit g on the queue, then f on the buffer."""
        previous = self.tau
        self.tau += 1
        self.updates += 1
        if len(self.queue) == 0 or len(self.buffer) == 0:
            log.debug("update %d skipped: empty buffers", self.tau)
            return
        cfg = self.config
        record_tau = self.queue.get("tau")
        if record_tau.max() > previous:
            raise AssertionError("error queue holds records newer than the pre-update dynamics model")
        x_all = self.encode(self.queue.get("obs"), self.queue.get("action"))
        eps_all = self.queue.get("eps")[:, None]
        n = len(eps_all)
        for _ in range(cfg.epochs_per_update):
            order = self.rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                mse_step(self.error_model, self.error_opt, x_all[idx], eps_all[idx])
        for _ in range(cfg.train_batches):
            obs, actions, next_obs = self.buffer.sample(cfg.batch_size, self.rng)
            mse_step(self.dynamics, self.dynamics_opt, self.encode(obs, actions), next_obs)

    # checkpointing -------------------------------------------------------

    def save(self, path) -> None:
        """Write a versioned ``.npz`` checkpoint (config and counters as JSON)."""
        arrays = {}
        for tag, model, opt in (("f", self.dynamics, self.dynamics_opt),
                                ("g", self.error_model, self.error_opt)):
            for i, p in enumerate(model.params):
                arrays[f"{tag}.param{i}"] = p
            for i, (m, v) in enumerate(zip(opt.m, opt.v)):
                arrays[f"{tag}.adam_m{i}"] = m
                arrays[f"{tag}.adam_v{i}"] = v
        for name, arr in self.buffer.state().items():
            arrays[f"buffer.{name}"] = arr
        for name, arr in self.queue.state().items():
            arrays[f"queue.{name}"] = arr
        meta = {
            "format": "lpm-checkpoint",
            "version": CHECKPOINT_VERSION,
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
            "config": asdict(self.config),
            "tau": self.tau,
            "t": self.t,
            "updates": self.updates,
            "adam_steps": {"f": self.dynamics_opt.step_count, "g": self.error_opt.step_count},
            "rng": self.rng.bit_generator.state,
        }
        arrays["meta"] = np.array(json.dumps(meta))
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> "LpmExplorer":
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("format") != "lpm-checkpoint" or meta.get("version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint: {meta.get('format')} v{meta.get('version')}")
            self = cls(meta["obs_dim"], meta["n_actions"], LpmConfig(**meta["config"]))
            for tag, model, opt in (("f", self.dynamics, self.dynamics_opt),
                                    ("g", self.error_model, self.error_opt)):
                model.params = [data[f"{tag}.param{i}"].copy() for i in range(len(model.params))]
                opt.step_count = meta["adam_steps"][tag]
                if f"{tag}.adam_m0" in data:
                    opt.m = [data[f"{tag}.adam_m{i}"].copy() for i in range(len(model.params))]
                    opt.v = [data[f"{tag}.adam_v{i}"].copy() for i in range(len(model.params))]
                Mlp.__post_init__(model)
            self.buffer.load_state({k: data[f"buffer.{k}"] for k in ("obs", "action", "next_obs")})
            self.queue.load_state({k: data[f"queue.{k}"] for k in ("obs", "action", "eps", "tau")})
        self.tau, self.t, self.updates = meta["tau"], meta["t"], meta["updates"]
        self.rng.bit_generator.state = meta["rng"]
        return self
