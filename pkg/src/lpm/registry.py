from __future__ import annotations

from .baselines import (AmaConfig, AmaExplorer, EnsembleConfig, EnsembleExplorer, PeCuriosity,
                        RndConfig, RndExplorer)
from .core import LpmConfig, LpmExplorer
from .explorer import Explorer, NullExplorer, TrainConfig

EXPLORERS = {
    "lpm": (LpmExplorer, LpmConfig),
    "pe": (PeCuriosity, TrainConfig),
    "rnd": (RndExplorer, RndConfig),
    "ensemble": (EnsembleExplorer, EnsembleConfig),
    "ama": (AmaExplorer, AmaConfig),
    "none": (NullExplorer, TrainConfig),
}


def make_explorer(name: str, obs_dim: int, n_actions: int, settings: dict | None = None,
                  seed=0) -> Explorer:
    """Build an explorer by name; settings its config does not define are ignored."""
    if name not in EXPLORERS:
        raise ValueError(f"unknown explorer {name!r}; choose from {sorted(EXPLORERS)}")
    cls, config_cls = EXPLORERS[name]
    allowed = set(config_cls.__dataclass_fields__)
    config = config_cls(**{k: v for k, v in (settings or {}).items() if k in allowed})
    return cls(obs_dim, n_actions, config, seed=seed)
