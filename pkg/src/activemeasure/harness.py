"""Multi-trial training and evaluation orchestration.

A run is ``trials`` independent training trials of the same configuration,
differing only by seed. Each trial periodically evaluates the greedy policy,
checkpoints whenever the evaluation median costed return improves, and logs a
metrics series. The run-level summary reports the median (and spread) of the
per-trial best costed returns. Trials touch only their own subdirectory, so a
caller may execute them concurrently; this module runs them sequentially.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agents import AgentConfig, build_agent, save_checkpoint
from .envs import Environment, make_env
from .errors import ActiveMeasureError, ContractError
from .wrapper import ActionPair, WrapperConfig, WrapperSession, unflatten_action

# Seed offsets keep evaluation episodes and training episodes on disjoint,
# reproducible streams within a trial.
EVAL_SEED_OFFSET = 1_000_000

METRICS_COLUMNS = (
    "trial",
    "env_steps",
    "episodes_seen",
    "eval_median_costed_return",
    "eval_median_raw_return",
    "eval_measure_fraction",
    "epsilon",
    "loss",
)

SUMMARY_COLUMNS = (
    "env",
    "agent",
    "cost",
    "vanilla",
    "trials",
    "median_best_costed",
    "min_best_costed",
    "max_best_costed",
    "std_best_costed",
    "median_best_raw",
)


@dataclass(frozen=True)
class EpisodeStats:
    """Undiscounted accounting for one evaluation episode."""

    raw_return: float
    costed_return: float
    steps: int
    measure_count: int


@dataclass(frozen=True)
class EvalPoint:
    env_steps: int
    episodes_seen: int
    median_costed: float
    median_raw: float
    measure_fraction: float
    epsilon: float
    loss: float


@dataclass
class TrialResult:
    trial: int
    eval_points: list[EvalPoint] = field(default_factory=list)
    best_point: EvalPoint | None = None
    best_traces: list[list[int]] = field(default_factory=list)
    best_stats: list[EpisodeStats] = field(default_factory=list)
    best_network: object | None = None
    checkpoint_path: Path | None = None
    failure: str | None = None

    @property
    def best_median_costed(self) -> float:
        if self.best_point is None:
            raise ContractError("trial recorded no evaluation")
        return self.best_point.median_costed

    @property
    def best_median_raw(self) -> float:
        if self.best_point is None:
            raise ContractError("trial recorded no evaluation")
        return self.best_point.median_raw


@dataclass(frozen=True)
class Summary:
    trials: int
    median_best_costed: float
    min_best_costed: float
    max_best_costed: float
    std_best_costed: float
    median_best_raw: float


@dataclass
class RunConfig:
    env_name: str = "cartpole"
    cost: float = 0.0
    vanilla: bool = False
    agent: AgentConfig = field(default_factory=AgentConfig)
    trials: int = 5
    train_steps: int = 150_000
    eval_every: int = 5_000
    eval_episodes: int = 10
    base_seed: int = 0
    out_dir: Path | None = None
    run_id: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ContractError(f"trials must be >= 1, got {self.trials}")
        if self.train_steps < 1:
            raise ContractError(f"train_steps must be >= 1, got {self.train_steps}")
        if self.eval_every < 1:
            raise ContractError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.eval_episodes < 1:
            raise ContractError(f"eval_episodes must be >= 1, got {self.eval_episodes}")
        if self.cost < 0:
            raise ContractError(f"cost must be >= 0, got {self.cost}")

    def wrapper_config(self) -> WrapperConfig:
        return WrapperConfig(cost=self.cost, vanilla=self.vanilla)

    def resolved_run_id(self) -> str:
        if self.run_id:
            return self.run_id
        suffix = "-vanilla" if self.vanilla else ""
        return f"{self.env_name}-{self.agent.kind}-cost{self.cost:g}{suffix}"


def _to_action_pair(index: int, vanilla: bool, num_actions: int) -> ActionPair:
    if vanilla:
        return ActionPair(base_action=index, measure=False)
    return unflatten_action(index, num_actions)


def rollout_episode(env: Environment, wcfg: WrapperConfig, policy, seed: int):
    """Greedy rollout; returns (EpisodeStats, per-step measurement 0/1 list)."""
    session = WrapperSession(env, wcfg, seed)
    obs = session.initial_observation()
    policy.begin_episode()
    raw = 0.0
    measures: list[int] = []
    while not session.done:
        action = policy.act(obs)
        result = session.step(_to_action_pair(action, wcfg.vanilla, env.spec.num_actions))
        raw += result.raw_reward
        measures.append(1 if result.measured else 0)
        obs = result.observation
    count = sum(measures)
    stats = EpisodeStats(
        raw_return=raw,
        # Exact by construction: one multiply and one subtract, never a
        # per-step accumulation of the cost. Pass-through mode never pays
        # even though every step counts as measured.
        costed_return=raw if wcfg.vanilla else raw - wcfg.cost * count,
        steps=len(measures),
        measure_count=count,
    )
    return stats, measures


def evaluate_policy(policy, env: Environment, wcfg: WrapperConfig,
                    n_episodes: int, seed_base: int):
    """Run greedy evaluation episodes on seeds seed_base, seed_base+1, ...

    Returns (list of EpisodeStats, list of measurement traces).
    """
    stats, traces = [], []
    for i in range(n_episodes):
        s, trace = rollout_episode(env, wcfg, policy, seed_base + i)
        stats.append(s)
        traces.append(trace)
    return stats, traces


def measurement_fraction(traces) -> float:
    """Measured steps / total steps, pooled across episodes."""
    total = sum(len(t) for t in traces)
    if total == 0:
        raise ContractError("measurement fraction of an empty trace")
    return sum(sum(t) for t in traces) / total


def run_trial(cfg: RunConfig, trial_index: int,
              trial_dir: Path | None = None) -> TrialResult:
    """Train one seed, evaluating every eval_every env steps.

    Deterministic given (cfg, trial_index). When trial_dir is given, writes
    metrics.csv, trace.csv, and checkpoint.best (rewritten on each
    improvement of the evaluation median costed return).
    """
    env = make_env(cfg.env_name)
    wcfg = cfg.wrapper_config()
    trial_seed = cfg.base_seed + trial_index
    eval_seed_base = trial_seed + EVAL_SEED_OFFSET

    probe = WrapperSession(env, wcfg, seed=0)
    agent = build_agent(probe.observation_dim, probe.num_flat_actions,
                        cfg.agent, trial_seed)
    episode_rng = np.random.default_rng([trial_seed, 1])

    result = TrialResult(trial=trial_index)
    episodes_seen = 0
    last_loss = float("nan")

    if trial_dir is not None:
        trial_dir.mkdir(parents=True, exist_ok=True)

    def run_eval() -> None:
        policy = agent.greedy_policy()
        stats, traces = evaluate_policy(policy, env, wcfg,
                                        cfg.eval_episodes, eval_seed_base)
        point = EvalPoint(
            env_steps=agent.env_steps,
            episodes_seen=episodes_seen,
            median_costed=float(np.median([s.costed_return for s in stats])),
            median_raw=float(np.median([s.raw_return for s in stats])),
            measure_fraction=measurement_fraction(traces),
            epsilon=agent.epsilon,
            loss=last_loss,
        )
        result.eval_points.append(point)
        if result.best_point is None or point.median_costed > result.best_point.median_costed:
            result.best_point = point
            result.best_traces = traces
            result.best_stats = stats
            result.best_network = agent.online.clone()
            if trial_dir is not None:
                path = trial_dir / "checkpoint.best"
                save_checkpoint(path, agent, cfg.env_name, cfg.cost,
                                cfg.vanilla, trial_seed)
                result.checkpoint_path = path

    while agent.env_steps < cfg.train_steps:
        session = WrapperSession(env, wcfg, int(episode_rng.integers(2**31)))
        obs = session.initial_observation()
        agent.begin_episode()
        while not session.done and agent.env_steps < cfg.train_steps:
            action = agent.act(obs)
            step = session.step(
                _to_action_pair(action, wcfg.vanilla, env.spec.num_actions))
            agent.observe(obs, action, step.costed_reward, step.observation,
                          step.terminated, step.truncated)
            loss = agent.train()
            if loss is not None:
                last_loss = loss
            obs = step.observation
            if agent.env_steps % cfg.eval_every == 0:
                run_eval()
        if session.done:
            episodes_seen += 1

    if not result.eval_points or result.eval_points[-1].env_steps != agent.env_steps:
        run_eval()

    if trial_dir is not None:
        _write_metrics(trial_dir / "metrics.csv", trial_index, result.eval_points)
        write_trace_csv(trial_dir / "trace.csv", result.best_traces)
    return result


def _write_metrics(path: Path, trial_index: int, points: list[EvalPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for p in points:
            writer.writerow([
                trial_index,
                p.env_steps,
                p.episodes_seen,
                repr(p.median_costed),
                repr(p.median_raw),
                repr(p.measure_fraction),
                repr(p.epsilon),
                repr(p.loss),
            ])


def write_trace_csv(path: Path, traces: list[list[int]]) -> None:
    with open(path, "w", newline="") as fh:
        for trace in traces:
            fh.write(",".join(str(int(m)) for m in trace))
            fh.write("\n")


def read_trace_csv(path: Path) -> list[list[int]]:
    traces = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                traces.append([int(tok) for tok in line.split(",")])
    return traces


def aggregate_trials(results: list[TrialResult]) -> Summary:
    """Median / min / max / std of per-trial best costed returns.

    Median of an even count is the midpoint of the two central values.
    """
    if not results:
        raise ContractError("cannot aggregate zero trials")
    best = np.array([r.best_median_costed for r in results])
    raws = np.array([r.best_median_raw for r in results])
    return Summary(
        trials=len(results),
        median_best_costed=float(np.median(best)),
        min_best_costed=float(best.min()),
        max_best_costed=float(best.max()),
        std_best_costed=float(best.std()),
        median_best_raw=float(np.median(raws)),
    )


@dataclass
class ExperimentResult:
    run_dir: Path | None
    trial_results: list[TrialResult]
    summary: Summary | None

    @property
    def failures(self) -> list[TrialResult]:
        return [t for t in self.trial_results if t.failure is not None]


def run_experiment(cfg: RunConfig, progress=None) -> ExperimentResult:
    """Run all trials of a configuration and write the run-level summary.

    A trial that raises a library error is recorded as failed and excluded
    from aggregation; remaining trials still run. ``progress`` is an optional
    callable receiving each finished TrialResult.
    """
    run_dir = None
    if cfg.out_dir is not None:
        run_dir = Path(cfg.out_dir) / cfg.resolved_run_id()
        run_dir.mkdir(parents=True, exist_ok=True)

    results: list[TrialResult] = []
    for k in range(cfg.trials):
        trial_dir = run_dir / f"trial-{k}" if run_dir is not None else None
        try:
            trial = run_trial(cfg, k, trial_dir)
        except ActiveMeasureError as exc:
            trial = TrialResult(trial=k, failure=str(exc))
        results.append(trial)
        if progress is not None:
            progress(trial)

    successes = [t for t in results if t.failure is None]
    summary = aggregate_trials(successes) if successes else None
    if run_dir is not None and summary is not None:
        write_summary_csv(run_dir / "summary.csv", cfg, summary)
    return ExperimentResult(run_dir=run_dir, trial_results=results, summary=summary)


def write_summary_csv(path: Path, cfg: RunConfig, summary: Summary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow([
            cfg.env_name,
            cfg.agent.kind,
            repr(cfg.cost),
            int(cfg.vanilla),
            summary.trials,
            repr(summary.median_best_costed),
            repr(summary.min_best_costed),
            repr(summary.max_best_costed),
            repr(summary.std_best_costed),
            repr(summary.median_best_raw),
        ])


def read_summary_csv(path: Path) -> dict:
    """Parse one summary.csv into a dict keyed by column name."""
    from .errors import DataFormatError

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0] != list(SUMMARY_COLUMNS):
        raise DataFormatError(f"{path}: not a run summary (row 1)")
    rec = dict(zip(SUMMARY_COLUMNS, rows[1]))
    for key in ("cost", "median_best_costed", "min_best_costed",
                "max_best_costed", "std_best_costed", "median_best_raw"):
        rec[key] = float(rec[key])
    rec["vanilla"] = bool(int(rec["vanilla"]))
    rec["trials"] = int(rec["trials"])
    return rec
