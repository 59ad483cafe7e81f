"""INI config schema for runs: parsing, overrides, canonical echo.

The document mirrors RunConfig across five sections (env, wrapper, agent,
run, output). Unknown sections or keys are rejected by name. A handful of
keys accept the sentinel ``auto`` and resolve to per-environment defaults at
build time. Rendering is canonical: parse -> render -> parse is a fixed
point, which lets a run directory's echoed config be re-used verbatim.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .agents import AgentConfig
from .envs import make_env
from .errors import ConfigurationError, ContractError
from .harness import RunConfig

AUTO = "auto"


def _parse_bool(s: str):
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int(s: str):
    return int(s.strip())


def _parse_float(s: str):
    return float(s.strip())


def _parse_str(s: str):
    return s.strip()


def _auto_or(parser):
    def parse(s: str):
        if s.strip().lower() == AUTO:
            return AUTO
        return parser(s)

    return parse


def _parse_hidden(s: str):
    sizes = tuple(int(tok) for tok in s.replace(" ", "").split(",") if tok)
    if not sizes or any(h < 1 for h in sizes):
        raise ValueError(f"expected comma-separated positive sizes, got {s!r}")
    return sizes


def _parse_kind(s: str):
    kind = s.strip().lower()
    if kind not in ("dueling_dqn", "drqn"):
        raise ValueError(f"agent kind must be dueling_dqn or drqn, got {s!r}")
    return kind


def _parse_activation(s: str):
    act = s.strip().lower()
    if act not in ("tanh", "relu"):
        raise ValueError(f"activation must be tanh or relu, got {s!r}")
    return act


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# section -> key -> (value parser, default; None marks a required/unset key)
SCHEMA: dict[str, dict[str, tuple]] = {
    "env": {
        "name": (_parse_str, None),
    },
    "wrapper": {
        "cost": (_parse_float, 0.0),
        "vanilla": (_parse_bool, False),
    },
    "agent": {
        "kind": (_parse_kind, "dueling_dqn"),
        "hidden": (_auto_or(_parse_hidden), AUTO),
        "activation": (_parse_activation, "tanh"),
        "lr": (_parse_float, 1e-3),
        "gamma": (_parse_float, 0.99),
        "buffer_capacity": (_parse_int, 50_000),
        "batch_size": (_parse_int, 64),
        "target_sync_every": (_parse_int, 500),
        "eps_start": (_parse_float, 1.0),
        "eps_end": (_parse_float, 0.05),
        "eps_decay_steps": (_parse_int, 20_000),
        "replay_warmup": (_parse_int, 1_000),
        "train_every": (_parse_int, 1),
        "recurrent_hidden": (_parse_int, 64),
        "seq_len": (_parse_int, 8),
        "burn_in": (_parse_int, 2),
        "episode_capacity": (_parse_int, 2_000),
    },
    "run": {
        "trials": (_parse_int, 5),
        "train_steps": (_auto_or(_parse_int), AUTO),
        "eval_every": (_auto_or(_parse_int), AUTO),
        "eval_episodes": (_parse_int, 10),
        "seed": (_parse_int, 0),
    },
    "output": {
        "dir": (_parse_str, None),
        "run_id": (_auto_or(_parse_str), AUTO),
    },
}

# Per-environment resolutions for the ``auto`` sentinel.
AUTO_HIDDEN = {"cartpole": (64, 64), "acrobot": (128, 128), "chain": (32, 32)}
AUTO_TRAIN_STEPS = {"cartpole": 150_000, "acrobot": 400_000, "chain": 5_000}
AUTO_EVAL_EVERY = {"cartpole": 5_000, "acrobot": 10_000, "chain": 500}


@dataclass
class ConfigDoc:
    """A typed, schema-checked configuration document."""

    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        if (section, key) in self.values:
            return self.values[(section, key)]
        return SCHEMA[section][key][1]

    def set(self, section: str, key: str, raw: str) -> None:
        if section not in SCHEMA:
            raise ConfigurationError(
                f"unknown config section [{section}] "
                f"(known: {', '.join(SCHEMA)})"
            )
        if key not in SCHEMA[section]:
            raise ConfigurationError(
                f"unknown config key {section}.{key} "
                f"(known in [{section}]: {', '.join(SCHEMA[section])})"
            )
        parser = SCHEMA[section][key][0]
        try:
            self.values[(section, key)] = parser(raw)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {section}.{key}: {exc}") from exc


def parse_config_text(text: str) -> ConfigDoc:
    """Parse INI text against the schema; unknown keys are rejected by name."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from exc
    doc = ConfigDoc()
    for section in cp.sections():
        for key, raw in cp.items(section):
            doc.set(section, key, raw)
    return doc


def parse_config_file(path) -> ConfigDoc:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def apply_overrides(doc: ConfigDoc, overrides) -> None:
    """Apply dotted-path overrides like ('wrapper.cost', '0.3'); last wins."""
    for dotted, raw in overrides:
        if "." not in dotted:
            raise ConfigurationError(
                f"override {dotted!r} must use a dotted section.key path"
            )
        section, key = dotted.split(".", 1)
        doc.set(section, key, raw)


def render_config(doc: ConfigDoc) -> str:
    """Canonical INI text including every defaulted key; parse(render(x)) == x."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = doc.get(section, key)
            if value is None:
                continue
            lines.append(f"{key} = {_render(value)}")
        lines.append("")
    return "\n".join(lines)


def build_run_config(doc: ConfigDoc) -> RunConfig:
    """Resolve the document (including auto sentinels) into a RunConfig."""
    env_name = doc.get("env", "name")
    if env_name is None:
        raise ConfigurationError("missing required key env.name")
    env = make_env(env_name)
    env_name = env.spec.name

    hidden = doc.get("agent", "hidden")
    if hidden == AUTO:
        hidden = AUTO_HIDDEN.get(env_name, (64, 64))
    train_steps = doc.get("run", "train_steps")
    if train_steps == AUTO:
        train_steps = AUTO_TRAIN_STEPS.get(env_name, 100_000)
    eval_every = doc.get("run", "eval_every")
    if eval_every == AUTO:
        eval_every = AUTO_EVAL_EVERY.get(env_name, 5_000)
    run_id = doc.get("output", "run_id")
    if run_id == AUTO:
        run_id = None
    out_dir = doc.get("output", "dir")

    try:
        agent = AgentConfig(
            kind=doc.get("agent", "kind"),
            hidden=hidden,
            activation=doc.get("agent", "activation"),
            lr=doc.get("agent", "lr"),
            gamma=doc.get("agent", "gamma"),
            buffer_capacity=doc.get("agent", "buffer_capacity"),
            batch_size=doc.get("agent", "batch_size"),
            target_sync_every=doc.get("agent", "target_sync_every"),
            eps_start=doc.get("agent", "eps_start"),
            eps_end=doc.get("agent", "eps_end"),
            eps_decay_steps=doc.get("agent", "eps_decay_steps"),
            replay_warmup=doc.get("agent", "replay_warmup"),
            train_every=doc.get("agent", "train_every"),
            recurrent_hidden=doc.get("agent", "recurrent_hidden"),
            seq_len=doc.get("agent", "seq_len"),
            burn_in=doc.get("agent", "burn_in"),
            episode_capacity=doc.get("agent", "episode_capacity"),
        )
        return RunConfig(
            env_name=env_name,
            cost=doc.get("wrapper", "cost"),
            vanilla=doc.get("wrapper", "vanilla"),
            agent=agent,
            trials=doc.get("run", "trials"),
            train_steps=train_steps,
            eval_every=eval_every,
            eval_episodes=doc.get("run", "eval_episodes"),
            base_seed=doc.get("run", "seed"),
            out_dir=Path(out_dir) if out_dir is not None else None,
            run_id=run_id,
        )
    except ContractError as exc:
        raise ConfigurationError(str(exc)) from exc
