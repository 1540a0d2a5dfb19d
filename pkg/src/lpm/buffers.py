"""FIFO storage for transitions (o, a, o_next) and error records (o, a, eps)."""
from __future__ import annotations

import numpy as np


class _Ring:
    """Preallocated FIFO of fixed-shape rows; ``capacity=None`` grows without bound."""

    def __init__(self, fields: dict[str, tuple[tuple[int, ...], type]], capacity: int | None):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._fields = fields
        alloc = capacity if capacity is not None else 256
        self._data = {name: np.zeros((alloc,) + shape, dtype=dtype)
                      for name, (shape, dtype) in fields.items()}
        self._start = 0
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def _alloc(self):
        return next(iter(self._data.values())).shape[0]

    def _grow(self):
        order = self._order()
        for name, arr in self._data.items():
            new = np.zeros((2 * len(arr),) + arr.shape[1:], dtype=arr.dtype)
            new[:self._size] = arr[order]
            self._data[name] = new
        self._start = 0

    def _order(self):
        return (self._start + np.arange(self._size)) % self._alloc

    def push(self, **values):
        if self.capacity is None and self._size == self._alloc:
            self._grow()
        if self._size == self._alloc:
            # full and bounded: overwrite the oldest entry
            slot = self._start
            self._start = (self._start + 1) % self._alloc
        else:
            slot = (self._start + self._size) % self._alloc
            self._size += 1
        for name, value in values.items():
            self._data[name][slot] = value

    def get(self, name: str, idx=None) -> np.ndarray:
        """Rows of one field, oldest first; ``idx`` indexes that FIFO order."""
        order = self._order()
        if idx is not None:
            order = order[idx]
        return self._data[name][order]

    def state(self) -> dict[str, np.ndarray]:
        return {name: self.get(name) for name in self._data}

    def load_state(self, arrays: dict[str, np.ndarray]):
        n = len(next(iter(arrays.values())))
        if self.capacity is not None and n > self.capacity:
            raise ValueError("stored entries exceed capacity")
        while self.capacity is None and self._alloc < n:
            self._grow()
        self._start, self._size = 0, n
        for name in self._data:
            self._data[name][:n] = arrays[name]


class TransitionBuffer(_Ring):
    def __init__(self, obs_dim: int, capacity: int | None = 10_000):
        super().__init__({"obs": ((obs_dim,), np.float64), "action": ((), np.int64),
                          "next_obs": ((obs_dim,), np.float64)}, capacity)

    def add(self, obs, action: int, next_obs):
        self.push(obs=obs, action=action, next_obs=next_obs)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(len(self), size=min(batch_size, len(self)))
        return self.get("obs", idx), self.get("action", idx), self.get("next_obs", idx)


class ErrorQueue(_Ring):
    """Fixed-size queue of (o, a, eps) with the model version that produced eps."""

    def __init__(self, obs_dim: int, capacity: int = 100):
        if capacity is None:
            raise ValueError("error queue must be bounded")
        super().__init__({"obs": ((obs_dim,), np.float64), "action": ((), np.int64),
                          "eps": ((), np.float64), "tau": ((), np.int64)}, capacity)

    @property
    def full(self) -> bool:
        return len(self) == self.capacity

    def add(self, obs, action: int, eps: float, tau: int):
        self.push(obs=obs, action=action, eps=eps, tau=tau)
