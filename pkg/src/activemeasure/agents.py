"""Dueling DQN and DRQN agents over the flattened action-pair space.

The networks decompose Q into a state value plus mean-centered advantages.
The feedforward agent trains on uniformly sampled transitions; the recurrent
agent trains on contiguous windows sampled inside single episodes, with a
burn-in prefix that shapes the hidden state but contributes no loss.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ContractError
from .nets import (
    Adam,
    DenseNet,
    GradientTape,
    RecurrentCell,
    assign_params,
    huber_loss,
    load_params,
    save_params,
)


@dataclass(frozen=True)
class Transition:
    obs: np.ndarray
    action: int
    costed_reward: float
    next_obs: np.ndarray
    done: bool


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear decay from start to end over decay_steps, clamped afterwards."""

    start: float = 1.0
    end: float = 0.05
    decay_steps: int = 20_000

    def value(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


@dataclass
class AgentConfig:
    kind: str = "dueling_dqn"
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    lr: float = 1e-3
    gamma: float = 0.99
    buffer_capacity: int = 50_000
    batch_size: int = 64
    target_sync_every: int = 500
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 20_000
    replay_warmup: int = 1_000
    train_every: int = 1
    recurrent_hidden: int = 64
    seq_len: int = 8
    burn_in: int = 2
    episode_capacity: int = 2_000

    def __post_init__(self):
        if self.kind not in ("dueling_dqn", "drqn"):
            raise ContractError(f"unknown agent kind {self.kind!r}")
        if not 0 <= self.burn_in < self.seq_len:
            raise ContractError(
                f"burn_in {self.burn_in} must lie in [0, seq_len={self.seq_len})"
            )


class ReplayBuffer:
    """Fixed-capacity ring of transitions with FIFO eviction."""

    def __init__(self, capacity: int, obs_dim: int):
        self.capacity = int(capacity)
        self.obs = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity)
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.dones = np.zeros(self.capacity)
        self.size = 0
        self._insert = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action, reward, next_obs, done) -> None:
        i = self._insert
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = 1.0 if done else 0.0
        self._insert = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, self.size, size=batch_size)
        return (
            self.obs[idx],
            self.actions[idx],
            self.rewards[idx],
            self.next_obs[idx],
            self.dones[idx],
        )


class EpisodeReplayBuffer:
    """FIFO ring of completed episodes, stored as stacked arrays."""

    def __init__(self, capacity_episodes: int, obs_dim: int):
        self.obs_dim = int(obs_dim)
        self.episodes: deque = deque(maxlen=int(capacity_episodes))

    def __len__(self) -> int:
        return len(self.episodes)

    def push_episode(self, obs, actions, rewards, next_obs, dones) -> None:
        if not len(obs):
            raise ContractError("refusing to store an empty episode")
        self.episodes.append(
            {
                "obs": np.asarray(obs, dtype=float),
                "actions": np.asarray(actions, dtype=np.int64),
                "rewards": np.asarray(rewards, dtype=float),
                "next_obs": np.asarray(next_obs, dtype=float),
                "dones": np.asarray(dones, dtype=float),
            }
        )

    def sample_windows(self, batch_size: int, seq_len: int, rng: np.random.Generator):
        """Sample contiguous windows of seq_len steps, never crossing episodes.

        Returns stacked (seq_len, batch, ...) arrays, or None when no stored
        episode is long enough.
        """
        eligible = [ep for ep in self.episodes if len(ep["actions"]) >= seq_len]
        if not eligible:
            return None
        obs = np.zeros((seq_len, batch_size, self.obs_dim))
        actions = np.zeros((seq_len, batch_size), dtype=np.int64)
        rewards = np.zeros((seq_len, batch_size))
        next_obs = np.zeros((seq_len, batch_size, self.obs_dim))
        dones = np.zeros((seq_len, batch_size))
        for b in range(batch_size):
            ep = eligible[rng.integers(0, len(eligible))]
            start = int(rng.integers(0, len(ep["actions"]) - seq_len + 1))
            sl = slice(start, start + seq_len)
            obs[:, b] = ep["obs"][sl]
            actions[:, b] = ep["actions"][sl]
            rewards[:, b] = ep["rewards"][sl]
            next_obs[:, b] = ep["next_obs"][sl]
            dones[:, b] = ep["dones"][sl]
        return obs, actions, rewards, next_obs, dones


def _combine_dueling(v: np.ndarray, a: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return v[0] + a - a.mean()
    return v + a - a.mean(axis=1, keepdims=True)


def _split_dueling_grad(dq: np.ndarray):
    # Q_j = V + A_j - mean(A) gives dV = sum_j dQ_j, dA_k = dQ_k - mean_j dQ_j.
    if dq.ndim == 1:
        return np.array([dq.sum()]), dq - dq.mean()
    return dq.sum(axis=1, keepdims=True), dq - dq.mean(axis=1, keepdims=True)


class DuelingQNetwork:
    """Shared dense trunk with scalar value and per-action advantage heads."""

    def __init__(
        self,
        obs_dim: int,
        num_actions: int,
        hidden=(64, 64),
        activation: str = "tanh",
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.obs_dim = int(obs_dim)
        self.num_actions = int(num_actions)
        self.hidden = tuple(int(h) for h in hidden)
        self.activation = activation
        self.trunk = DenseNet(
            [self.obs_dim, *self.hidden],
            rng,
            hidden_activation=activation,
            output_activation=activation,
        )
        feat = self.hidden[-1]
        self.value = DenseNet([feat, 1], rng)
        self.advantage = DenseNet([feat, self.num_actions], rng)

    def params(self) -> list[np.ndarray]:
        return self.trunk.params() + self.value.params() + self.advantage.params()

    def q_values(self, obs) -> np.ndarray:
        q, _ = self.forward(obs)
        return q

    def forward(self, obs):
        feat, trunk_cache = self.trunk.forward(obs)
        v, value_cache = self.value.forward(feat)
        a, adv_cache = self.advantage.forward(feat)
        return _combine_dueling(v, a), (trunk_cache, value_cache, adv_cache)

    def backward(self, cache, grad_q) -> GradientTape:
        trunk_cache, value_cache, adv_cache = cache
        dv, da = _split_dueling_grad(np.asarray(grad_q, dtype=float))
        value_tape, dfeat_v = self.value.backward(value_cache, dv)
        adv_tape, dfeat_a = self.advantage.backward(adv_cache, da)
        trunk_tape, _ = self.trunk.backward(trunk_cache, dfeat_v + dfeat_a)
        return GradientTape(trunk_tape.grads + value_tape.grads + adv_tape.grads)

    def clone(self) -> "DuelingQNetwork":
        other = DuelingQNetwork(
            self.obs_dim, self.num_actions, self.hidden, self.activation
        )
        other.copy_from(self)
        return other

    def copy_from(self, other: "DuelingQNetwork") -> None:
        sync_target(other, self)

    def meta(self) -> dict:
        return {
            "network": "dueling",
            "obs_dim": self.obs_dim,
            "num_actions": self.num_actions,
            "hidden": list(self.hidden),
            "activation": self.activation,
        }


class RecurrentQNetwork:
    """Elman cell followed by dueling heads; hidden state threads episodes."""

    def __init__(
        self,
        obs_dim: int,
        num_actions: int,
        hidden_dim: int = 64,
        rng: np.random.Generator | None = None,
    ):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.obs_dim = int(obs_dim)
        self.num_actions = int(num_actions)
        self.hidden_dim = int(hidden_dim)
        self.cell = RecurrentCell(self.obs_dim, self.hidden_dim, rng)
        self.value = DenseNet([self.hidden_dim, 1], rng)
        self.advantage = DenseNet([self.hidden_dim, self.num_actions], rng)

    def params(self) -> list[np.ndarray]:
        return self.cell.params() + self.value.params() + self.advantage.params()

    def initial_hidden(self) -> np.ndarray:
        return self.cell.initial_hidden()

    def q_step(self, obs, hidden):
        """Advance the hidden state one step and score all actions."""
        obs = np.asarray(obs, dtype=float)
        if obs.shape[-1] != self.obs_dim:
            raise ContractError(
                f"observation width {obs.shape[-1]} != network input {self.obs_dim}"
            )
        h = self.cell.step(obs, hidden)
        v, _ = self.value.forward(h)
        a, _ = self.advantage.forward(h)
        return _combine_dueling(v, a), h

    def forward_sequence(self, obs_seq, h0):
        """Q values over a (T, B, obs) window started from hidden h0."""
        hs, cell_cache = self.cell.forward(obs_seq, h0)
        T, B, H = hs.shape
        flat = hs.reshape(T * B, H)
        v, value_cache = self.value.forward(flat)
        a, adv_cache = self.advantage.forward(flat)
        q = _combine_dueling(v, a).reshape(T, B, self.num_actions)
        return q, (cell_cache, value_cache, adv_cache, (T, B, H))

    def backward_sequence(self, cache, grad_q) -> GradientTape:
        cell_cache, value_cache, adv_cache, (T, B, H) = cache
        dq = np.asarray(grad_q, dtype=float).reshape(T * B, self.num_actions)
        dv, da = _split_dueling_grad(dq)
        value_tape, dh_v = self.value.backward(value_cache, dv)
        adv_tape, dh_a = self.advantage.backward(adv_cache, da)
        dhs = (dh_v + dh_a).reshape(T, B, H)
        cell_tape, _, _ = self.cell.backward(cell_cache, dhs)
        return GradientTape(cell_tape.grads + value_tape.grads + adv_tape.grads)

    def clone(self) -> "RecurrentQNetwork":
        other = RecurrentQNetwork(self.obs_dim, self.num_actions, self.hidden_dim)
        other.copy_from(self)
        return other

    def copy_from(self, other: "RecurrentQNetwork") -> None:
        sync_target(other, self)

    def meta(self) -> dict:
        return {
            "network": "recurrent",
            "obs_dim": self.obs_dim,
            "num_actions": self.num_actions,
            "hidden_dim": self.hidden_dim,
        }


def select_action(q, epsilon: float, rng: np.random.Generator | None = None) -> int:
    """Epsilon-greedy over a Q vector; greedy ties break to the lowest index."""
    q = np.asarray(q)
    if q.size == 0:
        raise ContractError("empty Q vector")
    if epsilon > 0.0:
        if rng is None:
            raise ContractError("epsilon > 0 requires a random generator")
        if rng.random() < epsilon:
            return int(rng.integers(0, q.size))
    return int(np.argmax(q))


def td_targets(rewards, next_obs, dones, gamma: float, target_net) -> np.ndarray:
    """One-step targets y = r + gamma * max_a Q_target(s', a) * (1 - done)."""
    q_next = target_net.q_values(np.asarray(next_obs, dtype=float))
    return np.asarray(rewards, dtype=float) + gamma * q_next.max(axis=1) * (
        1.0 - np.asarray(dones, dtype=float)
    )


def sync_target(online, target) -> None:
    """Hard-copy every parameter of ``online`` into ``target``."""
    src = online.params()
    dst = target.params()
    if len(src) != len(dst):
        raise ContractError("parameter lists differ in length")
    for s, d in zip(src, dst):
        if s.shape != d.shape:
            raise ContractError(f"parameter shape mismatch: {s.shape} vs {d.shape}")
        d[...] = s


def dqn_train_step(
    online: DuelingQNetwork,
    target: DuelingQNetwork,
    buffer: ReplayBuffer,
    adam: Adam,
    rng: np.random.Generator,
    batch_size: int,
    gamma: float,
) -> float | None:
    """One uniform-replay TD update; returns the loss, or None if not ready."""
    if len(buffer) < batch_size:
        return None
    obs, actions, rewards, next_obs, dones = buffer.sample(batch_size, rng)
    y = td_targets(rewards, next_obs, dones, gamma, target)
    q, cache = online.forward(obs)
    rows = np.arange(batch_size)
    q_taken = q[rows, actions]
    loss, dl = huber_loss(q_taken, y)
    dq = np.zeros_like(q)
    dq[rows, actions] = dl
    adam.step(online.backward(cache, dq))
    return loss


def drqn_train_step(
    online: RecurrentQNetwork,
    target: RecurrentQNetwork,
    buffer: EpisodeReplayBuffer,
    adam: Adam,
    rng: np.random.Generator,
    batch_size: int,
    seq_len: int,
    burn_in: int,
    gamma: float,
) -> float | None:
    """One TD update over in-episode windows via backprop through time.

    The first ``burn_in`` positions of each window shape the hidden state but
    contribute no loss. Hidden states start from zero at each window, and the
    target network builds its own hidden state over the next-observation
    sequence. Returns the loss, or None when no episode is long enough.
    """
    if not 0 <= burn_in < seq_len:
        raise ContractError(f"burn_in {burn_in} must lie in [0, seq_len={seq_len})")
    windows = buffer.sample_windows(batch_size, seq_len, rng)
    if windows is None:
        return None
    obs, actions, rewards, next_obs, dones = windows
    h0 = np.zeros((batch_size, online.hidden_dim))
    q, cache = online.forward_sequence(obs, h0)
    q_next, _ = target.forward_sequence(next_obs, h0)
    y = rewards + gamma * q_next.max(axis=2) * (1.0 - dones)

    q_taken = np.take_along_axis(q, actions[:, :, None], axis=2)[:, :, 0]
    err = q_taken - y
    err[:burn_in] = 0.0
    n = (seq_len - burn_in) * batch_size
    abs_err = np.abs(err)
    quad = abs_err <= 1.0
    loss = float(np.where(quad, 0.5 * err * err, abs_err - 0.5).sum() / n)
    dl = np.clip(err, -1.0, 1.0) / n
    dq = np.zeros_like(q)
    np.put_along_axis(dq, actions[:, :, None], dl[:, :, None], axis=2)
    adam.step(online.backward_sequence(cache, dq))
    return loss


def act_greedy_recurrent(net: RecurrentQNetwork, obs, hidden):
    """Greedy action from one recurrent step; returns (action, new hidden)."""
    q, h = net.q_step(obs, hidden)
    return int(np.argmax(q)), h


class GreedyPolicy:
    """Stateless greedy wrapper around a feedforward Q network."""

    def __init__(self, net: DuelingQNetwork):
        self.net = net

    def begin_episode(self) -> None:
        pass

    def act(self, obs) -> int:
        return int(np.argmax(self.net.q_values(obs)))


class RecurrentGreedyPolicy:
    """Greedy wrapper threading hidden state within an episode."""

    def __init__(self, net: RecurrentQNetwork):
        self.net = net
        self.hidden = net.initial_hidden()

    def begin_episode(self) -> None:
        self.hidden = self.net.initial_hidden()

    def act(self, obs) -> int:
        action, self.hidden = act_greedy_recurrent(self.net, obs, self.hidden)
        return action


class DuelingDQNAgent:
    """Training-time agent: epsilon-greedy acting, replay, periodic syncs."""

    kind = "dueling_dqn"

    def __init__(self, obs_dim: int, num_actions: int, cfg: AgentConfig, seed: int):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.online = DuelingQNetwork(
            obs_dim, num_actions, cfg.hidden, cfg.activation, self.rng
        )
        self.target = self.online.clone()
        self.buffer = ReplayBuffer(cfg.buffer_capacity, obs_dim)
        self.adam = Adam(self.online.params(), lr=cfg.lr)
        self.schedule = EpsilonSchedule(cfg.eps_start, cfg.eps_end, cfg.eps_decay_steps)
        self.env_steps = 0
        self.updates = 0

    @property
    def epsilon(self) -> float:
        return self.schedule.value(self.env_steps)

    def begin_episode(self) -> None:
        pass

    def act(self, obs) -> int:
        eps = self.epsilon
        if eps > 0.0 and self.rng.random() < eps:
            return int(self.rng.integers(0, self.online.num_actions))
        return int(np.argmax(self.online.q_values(obs)))

    def observe(self, obs, action, costed_reward, next_obs, terminated, truncated) -> None:
        # Bootstrapping continues through time-limit cutoffs, so only true
        # termination marks the transition as done.
        self.buffer.push(obs, action, costed_reward, next_obs, terminated)
        self.env_steps += 1

    def train(self) -> float | None:
        if self.env_steps < self.cfg.replay_warmup:
            return None
        if self.env_steps % self.cfg.train_every != 0:
            return None
        loss = dqn_train_step(
            self.online,
            self.target,
            self.buffer,
            self.adam,
            self.rng,
            self.cfg.batch_size,
            self.cfg.gamma,
        )
        if loss is not None:
            self.updates += 1
            if self.updates % self.cfg.target_sync_every == 0:
                sync_target(self.online, self.target)
        return loss

    def greedy_policy(self) -> GreedyPolicy:
        return GreedyPolicy(self.online)


class DRQNAgent:
    """Recurrent training-time agent; hidden state advances on every step."""

    kind = "drqn"

    def __init__(self, obs_dim: int, num_actions: int, cfg: AgentConfig, seed: int):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.online = RecurrentQNetwork(
            obs_dim, num_actions, cfg.recurrent_hidden, self.rng
        )
        self.target = self.online.clone()
        self.buffer = EpisodeReplayBuffer(cfg.episode_capacity, obs_dim)
        self.adam = Adam(self.online.params(), lr=cfg.lr)
        self.schedule = EpsilonSchedule(cfg.eps_start, cfg.eps_end, cfg.eps_decay_steps)
        self.env_steps = 0
        self.updates = 0
        self.hidden = self.online.initial_hidden()
        self._episode: list[Transition] = []

    @property
    def epsilon(self) -> float:
        return self.schedule.value(self.env_steps)

    def begin_episode(self) -> None:
        self.hidden = self.online.initial_hidden()
        self._episode = []

    def act(self, obs) -> int:
        # The hidden state tracks the observation history regardless of how
        # the action is chosen, so the recurrent step always runs.
        q, self.hidden = self.online.q_step(obs, self.hidden)
        eps = self.epsilon
        if eps > 0.0 and self.rng.random() < eps:
            return int(self.rng.integers(0, self.online.num_actions))
        return int(np.argmax(q))

    def observe(self, obs, action, costed_reward, next_obs, terminated, truncated) -> None:
        self._episode.append(
            Transition(np.asarray(obs, dtype=float), action, costed_reward,
                       np.asarray(next_obs, dtype=float), terminated)
        )
        self.env_steps += 1
        if terminated or truncated:
            self.buffer.push_episode(
                [tr.obs for tr in self._episode],
                [tr.action for tr in self._episode],
                [tr.costed_reward for tr in self._episode],
                [tr.next_obs for tr in self._episode],
                [tr.done for tr in self._episode],
            )
            self._episode = []

    def train(self) -> float | None:
        if self.env_steps < self.cfg.replay_warmup:
            return None
        if self.env_steps % self.cfg.train_every != 0:
            return None
        loss = drqn_train_step(
            self.online,
            self.target,
            self.buffer,
            self.adam,
            self.rng,
            self.cfg.batch_size,
            self.cfg.seq_len,
            self.cfg.burn_in,
            self.cfg.gamma,
        )
        if loss is not None:
            self.updates += 1
            if self.updates % self.cfg.target_sync_every == 0:
                sync_target(self.online, self.target)
        return loss

    def greedy_policy(self) -> RecurrentGreedyPolicy:
        return RecurrentGreedyPolicy(self.online)


def build_agent(obs_dim: int, num_actions: int, cfg: AgentConfig, seed: int):
    if cfg.kind == "dueling_dqn":
        return DuelingDQNAgent(obs_dim, num_actions, cfg, seed)
    return DRQNAgent(obs_dim, num_actions, cfg, seed)


def save_checkpoint(path, agent, env_name: str, cost: float, vanilla: bool, seed: int) -> None:
    """Write the online network plus a manifest describing its provenance."""
    manifest = {
        "agent": agent.kind,
        "env": env_name,
        "cost": float(cost),
        "vanilla": bool(vanilla),
        "seed": int(seed),
        **agent.online.meta(),
    }
    save_params(path, agent.online.params(), manifest)


def load_checkpoint(path):
    """Rebuild the stored network; returns (manifest, network)."""
    manifest, arrays = load_params(path)
    kind = manifest.get("network")
    try:
        if kind == "dueling":
            net = DuelingQNetwork(
                manifest["obs_dim"],
                manifest["num_actions"],
                tuple(manifest["hidden"]),
                manifest["activation"],
            )
        elif kind == "recurrent":
            net = RecurrentQNetwork(
                manifest["obs_dim"], manifest["num_actions"], manifest["hidden_dim"]
            )
        else:
            raise CheckpointError(f"{path}: unknown network kind {kind!r}")
    except KeyError as exc:
        raise CheckpointError(f"{path}: manifest missing field {exc}") from exc
    assign_params(net.params(), arrays)
    return manifest, net


def policy_from_checkpoint(path):
    """Load a checkpoint as a ready-to-run greedy policy."""
    manifest, net = load_checkpoint(path)
    if manifest["network"] == "recurrent":
        return manifest, RecurrentGreedyPolicy(net)
    return manifest, GreedyPolicy(net)
