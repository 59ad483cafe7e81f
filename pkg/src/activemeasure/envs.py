"""Episodic control environments with pure, seedable dynamics.

Each environment is a stateless rule set: ``reset(seed)`` produces an initial
state vector and ``step(state, action, t)`` advances any valid state. Episode
state lives with the caller, so a single instance can serve many concurrent
rollouts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractError


@dataclass(frozen=True)
class EnvSpec:
    """Static description of an environment."""

    name: str
    state_dim: int
    num_actions: int
    max_steps: int


@dataclass(frozen=True)
class EnvStep:
    """Result of one transition."""

    next_state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class Environment:
    """Base class; subclasses define `spec`, `reset` and `step`."""

    spec: EnvSpec

    def reset(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def step(self, state: np.ndarray, action: int, t: int) -> EnvStep:
        raise NotImplementedError

    def _check_action(self, action: int) -> None:
        if not 0 <= action < self.spec.num_actions:
            raise ContractError(
                f"action {action} out of range [0, {self.spec.num_actions}) "
                f"for {self.spec.name}"
            )

    def _truncated(self, t: int, terminated: bool) -> bool:
        # t is the 0-based index of the step being taken.
        return (not terminated) and (t + 1 >= self.spec.max_steps)


class CartPole(Environment):
    """Cart-pole balancing with the canonical constants and Euler integration.

    State: [cart position, cart velocity, pole angle, pole angular velocity].
    Action 0 pushes left, 1 pushes right. Reward +1.0 every step; the episode
    terminates when the cart leaves +-2.4 m or the pole exceeds 12 degrees,
    and truncates after 200 steps.
    """

    GRAVITY = 9.8
    MASS_CART = 1.0
    MASS_POLE = 0.1
    TOTAL_MASS = MASS_CART + MASS_POLE
    HALF_LENGTH = 0.5
    POLE_MASS_LENGTH = MASS_POLE * HALF_LENGTH
    FORCE_MAG = 10.0
    TAU = 0.02
    X_LIMIT = 2.4
    THETA_LIMIT = 12.0 * math.pi / 180.0

    spec = EnvSpec(name="cartpole", state_dim=4, num_actions=2, max_steps=200)

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.uniform(-0.05, 0.05, size=4)

    def step(self, state: np.ndarray, action: int, t: int) -> EnvStep:
        self._check_action(action)
        x, x_dot, theta, theta_dot = (float(v) for v in state)
        force = self.FORCE_MAG if action == 1 else -self.FORCE_MAG
        cos_t = math.cos(theta)
        sin_t = math.sin(theta)

        temp = (force + self.POLE_MASS_LENGTH * theta_dot**2 * sin_t) / self.TOTAL_MASS
        theta_acc = (self.GRAVITY * sin_t - cos_t * temp) / (
            self.HALF_LENGTH
            * (4.0 / 3.0 - self.MASS_POLE * cos_t**2 / self.TOTAL_MASS)
        )
        x_acc = temp - self.POLE_MASS_LENGTH * theta_acc * cos_t / self.TOTAL_MASS

        # Position updated with the pre-step velocity, then velocity with the
        # fresh acceleration (the canonical update order).
        x = x + self.TAU * x_dot
        x_dot = x_dot + self.TAU * x_acc
        theta = theta + self.TAU * theta_dot
        theta_dot = theta_dot + self.TAU * theta_acc

        terminated = abs(x) > self.X_LIMIT or abs(theta) > self.THETA_LIMIT
        return EnvStep(
            next_state=np.array([x, x_dot, theta, theta_dot]),
            reward=1.0,
            terminated=terminated,
            truncated=self._truncated(t, terminated),
        )


class Acrobot(Environment):
    """Two-link underactuated pendulum, book dynamics with RK4 integration.

    State: [cos t1, sin t1, cos t2, sin t2, w1, w2]. Actions apply torque
    {-1, 0, +1} to the second joint. Reward -1.0 every step; the episode
    terminates once the tip swings above the bar and truncates at 500 steps.
    """

    L1 = 1.0
    M1 = 1.0
    M2 = 1.0
    LC1 = 0.5
    LC2 = 0.5
    MOI = 1.0
    GRAVITY = 9.8
    DT = 0.2
    MAX_VEL_1 = 4.0 * math.pi
    MAX_VEL_2 = 9.0 * math.pi
    TORQUES = (-1.0, 0.0, 1.0)

    spec = EnvSpec(name="acrobot", state_dim=6, num_actions=3, max_steps=500)

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        theta1, theta2, w1, w2 = rng.uniform(-0.1, 0.1, size=4)
        return self._observe(theta1, theta2, w1, w2)

    @staticmethod
    def _observe(theta1, theta2, w1, w2) -> np.ndarray:
        return np.array(
            [
                math.cos(theta1),
                math.sin(theta1),
                math.cos(theta2),
                math.sin(theta2),
                w1,
                w2,
            ]
        )

    def _derivs(self, theta1, theta2, w1, w2, torque):
        d1 = (
            self.M1 * self.LC1**2
            + self.M2
            * (self.L1**2 + self.LC2**2 + 2.0 * self.L1 * self.LC2 * math.cos(theta2))
            + 2.0 * self.MOI
        )
        d2 = self.M2 * (self.LC2**2 + self.L1 * self.LC2 * math.cos(theta2)) + self.MOI
        phi2 = self.M2 * self.LC2 * self.GRAVITY * math.cos(theta1 + theta2 - math.pi / 2.0)
        phi1 = (
            -self.M2 * self.L1 * self.LC2 * w2**2 * math.sin(theta2)
            - 2.0 * self.M2 * self.L1 * self.LC2 * w2 * w1 * math.sin(theta2)
            + (self.M1 * self.LC1 + self.M2 * self.L1)
            * self.GRAVITY
            * math.cos(theta1 - math.pi / 2.0)
            + phi2
        )
        ddw2 = (
            torque
            + d2 / d1 * phi1
            - self.M2 * self.L1 * self.LC2 * w1**2 * math.sin(theta2)
            - phi2
        ) / (self.M2 * self.LC2**2 + self.MOI - d2**2 / d1)
        ddw1 = -(d2 * ddw2 + phi1) / d1
        return w1, w2, ddw1, ddw2

    def step(self, state: np.ndarray, action: int, t: int) -> EnvStep:
        self._check_action(action)
        cos1, sin1, cos2, sin2, w1, w2 = (float(v) for v in state)
        theta1 = math.atan2(sin1, cos1)
        theta2 = math.atan2(sin2, cos2)
        torque = self.TORQUES[action]

        # One RK4 step of size DT on (theta1, theta2, w1, w2).
        y = (theta1, theta2, w1, w2)
        k1 = self._derivs(*y, torque)
        k2 = self._derivs(*(a + 0.5 * self.DT * b for a, b in zip(y, k1)), torque)
        k3 = self._derivs(*(a + 0.5 * self.DT * b for a, b in zip(y, k2)), torque)
        k4 = self._derivs(*(a + self.DT * b for a, b in zip(y, k3)), torque)
        theta1, theta2, w1, w2 = (
            a + self.DT / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )

        theta1 = self._wrap_angle(theta1)
        theta2 = self._wrap_angle(theta2)
        w1 = min(max(w1, -self.MAX_VEL_1), self.MAX_VEL_1)
        w2 = min(max(w2, -self.MAX_VEL_2), self.MAX_VEL_2)

        terminated = -math.cos(theta1) - math.cos(theta2 + theta1) > 1.0
        return EnvStep(
            next_state=self._observe(theta1, theta2, w1, w2),
            reward=-1.0,
            terminated=terminated,
            truncated=self._truncated(t, terminated),
        )

    @staticmethod
    def _wrap_angle(x: float) -> float:
        return (x + math.pi) % (2.0 * math.pi) - math.pi


class ChainMDP(Environment):
    """Deterministic five-cell chain; small enough to enumerate exhaustively.

    The agent starts in cell 0. Action 0 moves one cell right, action 1 stays
    put. Entering cell 4 pays +1.0 and terminates; everything else pays 0.
    """

    NUM_CELLS = 5
    GOAL = NUM_CELLS - 1

    spec = EnvSpec(name="chain", state_dim=1, num_actions=2, max_steps=10)

    def reset(self, seed: int) -> np.ndarray:
        return np.array([0.0])

    def step(self, state: np.ndarray, action: int, t: int) -> EnvStep:
        self._check_action(action)
        cell = int(state[0])
        if not 0 <= cell <= self.GOAL:
            raise ContractError(f"chain cell {cell} outside 0..{self.GOAL}")
        next_cell = min(cell + 1, self.GOAL) if action == 0 else cell
        terminated = next_cell == self.GOAL and cell != self.GOAL
        reward = 1.0 if terminated else 0.0
        return EnvStep(
            next_state=np.array([float(next_cell)]),
            reward=reward,
            terminated=terminated,
            truncated=self._truncated(t, terminated),
        )


_ENV_CLASSES: dict[str, type[Environment]] = {
    "cartpole": CartPole,
    "acrobot": Acrobot,
    "chain": ChainMDP,
}


def env_names() -> tuple[str, ...]:
    return tuple(sorted(_ENV_CLASSES))


def make_env(name: str) -> Environment:
    """Look up an environment by its lowercase registry name."""
    try:
        cls = _ENV_CLASSES[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown environment {name!r}; known: {', '.join(env_names())}"
        ) from None
    return cls()
