"""Costed-observation wrapper: turns any environment into an active-measure MDP.

Every action is a pair (base action, measure?). The true dynamics always
advance; measuring returns the fresh state and deducts a fixed cost from the
reward, while not measuring returns the remembered last-measured state for
free. A trailing freshness flag on the observation tells the agent which case
it is seeing. ``vanilla=True`` turns the wrapper into a transparent
pass-through for baseline comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Environment
from .errors import ConfigurationError, ContractError

FRESH = 1.0
STALE = 0.0


@dataclass(frozen=True)
class ActionPair:
    """A base environment action plus the measurement directive."""

    base_action: int
    measure: bool


@dataclass(frozen=True)
class WrapperConfig:
    cost: float = 0.0
    vanilla: bool = False

    def __post_init__(self):
        if self.cost < 0:
            raise ConfigurationError(f"measurement cost must be >= 0, got {self.cost}")


@dataclass(frozen=True)
class WrapStepResult:
    observation: np.ndarray
    costed_reward: float
    terminated: bool
    truncated: bool
    raw_reward: float
    measured: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class WrapperSession:
    """One active-measure episode over a base environment.

    Owns the hidden true state and the last-measured memory; single-owner,
    not safe for concurrent mutation. Distinct sessions are independent.
    """

    def __init__(self, env: Environment, config: WrapperConfig, seed: int):
        self.env = env
        self.config = config
        self.spec = env.spec
        self.true_state = env.reset(seed)
        # The reset observation is fresh and free: memory starts at the
        # initial state and no cost is charged.
        self.last_measured = self.true_state.copy()
        self.step_count = 0
        self.terminated = False
        self.truncated = False

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated

    @property
    def observation_dim(self) -> int:
        return self.spec.state_dim if self.config.vanilla else self.spec.state_dim + 1

    @property
    def num_flat_actions(self) -> int:
        return self.spec.num_actions if self.config.vanilla else 2 * self.spec.num_actions

    def initial_observation(self) -> np.ndarray:
        if self.config.vanilla:
            return self.true_state.copy()
        return np.append(self.true_state, FRESH)

    def step(self, action: ActionPair) -> WrapStepResult:
        if self.done:
            raise ContractError("step() called on a finished session")
        result = self.env.step(self.true_state, action.base_action, self.step_count)
        self.true_state = result.next_state
        self.step_count += 1
        self.terminated = result.terminated
        self.truncated = result.truncated

        if self.config.vanilla:
            # Pass-through observations always expose the live state, so every
            # step counts as measured (while the measure directive and the
            # cost are both ignored).
            return WrapStepResult(
                observation=self.true_state.copy(),
                costed_reward=result.reward,
                terminated=result.terminated,
                truncated=result.truncated,
                raw_reward=result.reward,
                measured=True,
            )

        if action.measure:
            self.last_measured = self.true_state.copy()
            observation = np.append(self.true_state, FRESH)
            costed = result.reward - self.config.cost
        else:
            observation = np.append(self.last_measured, STALE)
            costed = result.reward
        return WrapStepResult(
            observation=observation,
            costed_reward=costed,
            terminated=result.terminated,
            truncated=result.truncated,
            raw_reward=result.reward,
            measured=action.measure,
        )


def flatten_action(pair: ActionPair, num_actions: int) -> int:
    """Map an action pair to a flat index: 2 * base + measure bit."""
    if not 0 <= pair.base_action < num_actions:
        raise ContractError(
            f"base action {pair.base_action} out of range [0, {num_actions})"
        )
    return 2 * pair.base_action + (1 if pair.measure else 0)


def unflatten_action(index: int, num_actions: int) -> ActionPair:
    """Inverse of :func:`flatten_action` on [0, 2 * num_actions)."""
    if not 0 <= index < 2 * num_actions:
        raise ContractError(
            f"flat action {index} out of range [0, {2 * num_actions})"
        )
    return ActionPair(base_action=index // 2, measure=bool(index % 2))


def costed_return(raw_rewards, measures, cost: float, gamma: float = 1.0) -> float:
    """Discounted sum of per-step rewards net of measurement charges."""
    if len(raw_rewards) != len(measures):
        raise ContractError(
            f"length mismatch: {len(raw_rewards)} rewards vs {len(measures)} measures"
        )
    if not 0.0 <= gamma <= 1.0:
        raise ContractError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    discount = 1.0
    for r, m in zip(raw_rewards, measures):
        total += discount * (r - (cost if m else 0.0))
        discount *= gamma
    return total
