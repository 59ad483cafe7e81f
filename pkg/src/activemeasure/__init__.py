"""Reinforcement learning with explicit observation costs.

The package wraps classic control tasks so that every action carries a
measure/skip bit: measuring returns the fresh state at a price deducted from
the reward, skipping returns the last measured state for free. Feedforward
and recurrent Q-learning agents, built on a small numpy-only differentiable
core, learn when observing is worth the cost.
"""

from .envs import Acrobot, CartPole, ChainMDP, EnvSpec, EnvStep, env_names, make_env
from .errors import (
    ActiveMeasureError,
    CheckpointError,
    ConfigurationError,
    ContractError,
    DataFormatError,
)
from .wrapper import (
    FRESH,
    STALE,
    ActionPair,
    WrapStepResult,
    WrapperConfig,
    WrapperSession,
    costed_return,
    flatten_action,
    unflatten_action,
)

__version__ = "0.1.0"

__all__ = [
    "Acrobot",
    "ActionPair",
    "ActiveMeasureError",
    "CartPole",
    "ChainMDP",
    "CheckpointError",
    "ConfigurationError",
    "ContractError",
    "DataFormatError",
    "EnvSpec",
    "EnvStep",
    "FRESH",
    "STALE",
    "WrapStepResult",
    "WrapperConfig",
    "WrapperSession",
    "costed_return",
    "env_names",
    "flatten_action",
    "make_env",
    "unflatten_action",
    "__version__",
]
