"""Learning-progress intrinsic rewards, baseline explorers, and an exact information-gain oracle."""
from .agent import AgentConfig, QTable, q_update, select_action
from .baselines import AmaConfig, AmaExplorer, EnsembleConfig, EnsembleExplorer, PeCuriosity, RndConfig, RndExplorer
from .core import LpmConfig, LpmExplorer, combined_reward
from .explorer import Explorer, NullExplorer, TrainConfig
from .nn import Adam, Mlp, adam_step, log_mse, make_rng, mlp_backward, mlp_forward
from .registry import EXPLORERS, make_explorer

__all__ = [
    "Adam", "AgentConfig", "AmaConfig", "AmaExplorer", "EXPLORERS", "EnsembleConfig", "EnsembleExplorer",
    "Explorer", "LpmConfig", "LpmExplorer", "Mlp", "NullExplorer", "PeCuriosity", "QTable", "RndConfig",
    "RndExplorer", "TrainConfig", "adam_step", "combined_reward", "log_mse", "make_explorer", "make_rng",
    "mlp_backward", "mlp_forward", "q_update", "select_action",
]
