"""Command-line front end: train runs, evaluate checkpoints, plot, compare.

Exit codes are stable: 0 success, 2 configuration problem, 3 checkpoint
problem, 4 data-file problem, 1 any other failure (including failed trials).
Unrecognized ``--section.key=value`` tokens are dotted-path overrides applied
to the config document, last writer wins. The environment variable
``ACTMEAS_OUT`` supplies the default output root.
"""

from __future__ import annotations

import argparse
import csv
import os
import re
import sys
from pathlib import Path

from .config import (
    ConfigDoc,
    apply_overrides,
    build_run_config,
    parse_config_file,
    render_config,
)
from .errors import (
    ActiveMeasureError,
    CheckpointError,
    ConfigurationError,
    ContractError,
    DataFormatError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3
EXIT_DATA = 4

_OVERRIDE_RE = re.compile(r"^--([A-Za-z_]+\.[A-Za-z_]+)=(.*)$", re.DOTALL)


def _parse_extras(extras) -> list[tuple[str, str]]:
    """Turn leftover argv tokens into (dotted key, value) override pairs."""
    overrides = []
    for token in extras:
        match = _OVERRIDE_RE.match(token)
        if not match:
            raise ConfigurationError(
                f"unrecognized argument {token!r}; overrides look like "
                "--section.key=value"
            )
        overrides.append((match.group(1), match.group(2)))
    return overrides


def _default_out_root(fallback: str = "runs") -> str:
    return os.environ.get("ACTMEAS_OUT", fallback)


def cmd_train(args, extras) -> int:
    from .harness import run_experiment

    doc = parse_config_file(args.config)
    apply_overrides(doc, _parse_extras(extras))
    if args.seed is not None:
        doc.set("run", "seed", str(args.seed))
    if args.trials is not None:
        doc.set("run", "trials", str(args.trials))
    if args.out is not None:
        doc.set("output", "dir", args.out)
    elif doc.get("output", "dir") is None:
        doc.set("output", "dir", _default_out_root())
    cfg = build_run_config(doc)

    run_dir = Path(cfg.out_dir) / cfg.resolved_run_id()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.ini").write_text(render_config(doc))
    print(f"run directory: {run_dir}")

    def progress(trial):
        if trial.failure is not None:
            print(f"trial {trial.trial}: FAILED: {trial.failure}")
        else:
            print(
                f"trial {trial.trial}: best median costed "
                f"{trial.best_median_costed:.2f} "
                f"(raw {trial.best_median_raw:.2f}, "
                f"measure fraction {trial.best_point.measure_fraction:.2f})"
            )

    result = run_experiment(cfg, progress=progress)
    if result.summary is not None:
        s = result.summary
        print(
            f"summary: median best costed {s.median_best_costed:.2f} "
            f"over {s.trials} trials "
            f"(min {s.min_best_costed:.2f}, max {s.max_best_costed:.2f}, "
            f"std {s.std_best_costed:.2f})"
        )
    if result.failures:
        print(f"{len(result.failures)} trial(s) failed", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_eval(args, extras) -> int:
    from .agents import policy_from_checkpoint
    from .envs import make_env
    from .harness import evaluate_policy, measurement_fraction, write_trace_csv
    from .wrapper import WrapperConfig, WrapperSession

    if extras:
        raise ConfigurationError(f"unrecognized arguments: {' '.join(extras)}")
    manifest, policy = policy_from_checkpoint(args.checkpoint)
    env_name = manifest.get("env")
    if args.env is not None and args.env.lower() != env_name:
        raise CheckpointError(
            f"checkpoint was trained on {env_name!r}, not {args.env!r}"
        )
    env = make_env(env_name)
    wcfg = WrapperConfig(cost=float(manifest.get("cost", 0.0)),
                         vanilla=bool(manifest.get("vanilla", False)))
    probe = WrapperSession(env, wcfg, seed=0)
    if manifest.get("obs_dim") != probe.observation_dim:
        raise CheckpointError(
            f"checkpoint expects {manifest.get('obs_dim')}-dim observations "
            f"but {env_name} provides {probe.observation_dim}"
        )

    seed = args.seed if args.seed is not None else 0
    stats, traces = evaluate_policy(policy, env, wcfg, args.episodes, seed)
    print(f"env={env_name} agent={manifest.get('agent')} "
          f"cost={wcfg.cost:g} vanilla={str(wcfg.vanilla).lower()}")
    print(f"{'episode':>7} {'raw':>10} {'costed':>10} {'steps':>6} "
          f"{'measured':>8} {'fraction':>8}")
    for i, (s, t) in enumerate(zip(stats, traces)):
        frac = s.measure_count / s.steps if s.steps else 0.0
        print(f"{i:>7} {s.raw_return:>10.2f} {s.costed_return:>10.2f} "
              f"{s.steps:>6} {s.measure_count:>8} {frac:>8.3f}")
    import numpy as np

    print(f"median raw {np.median([s.raw_return for s in stats]):.2f}, "
          f"median costed {np.median([s.costed_return for s in stats]):.2f}, "
          f"measure fraction {measurement_fraction(traces):.3f}")

    out_root = Path(args.out if args.out is not None else _default_out_root("."))
    out_root.mkdir(parents=True, exist_ok=True)
    trace_path = out_root / "trace.csv"
    write_trace_csv(trace_path, traces)
    print(f"trace written to {trace_path}")
    return EXIT_OK


def _expand_plot_inputs(kind: str, raw_inputs) -> tuple[Path, ...]:
    """Accept run/trial directories and expand them to the files a kind needs."""
    inputs: list[Path] = []
    for raw in raw_inputs:
        p = Path(raw)
        if p.is_dir():
            if kind == "trace-grid":
                inputs.append(p / "trace.csv")
            elif kind == "learning-curve":
                found = sorted(p.glob("trial-*/metrics.csv"))
                inputs.extend(found if found else [p / "metrics.csv"])
            else:
                inputs.append(p / "summary.csv")
        else:
            inputs.append(p)
    missing = [str(p) for p in inputs if not p.is_file()]
    if missing:
        raise DataFormatError(f"missing input file(s): {', '.join(missing)}")
    return tuple(inputs)


def cmd_plot(args, extras) -> int:
    from .plots import PlotSpec, render_plot

    if extras:
        raise ConfigurationError(f"unrecognized arguments: {' '.join(extras)}")
    inputs = _expand_plot_inputs(args.kind, args.inputs)
    out = Path(args.out) if args.out is not None else Path(f"{args.kind}.svg")
    out.parent.mkdir(parents=True, exist_ok=True)
    spec = PlotSpec(kind=args.kind, inputs=inputs, output=out)
    written = render_plot(spec)
    print(f"wrote {written} and {written.with_suffix('.csv')}")
    return EXIT_OK


def cmd_compare(args, extras) -> int:
    from .harness import read_summary_csv

    if extras:
        raise ConfigurationError(f"unrecognized arguments: {' '.join(extras)}")
    if len(args.run_dirs) < 2:
        raise DataFormatError("compare needs at least two run directories")
    runs = []
    for raw in args.run_dirs:
        path = Path(raw)
        summary = path / "summary.csv" if path.is_dir() else path
        if not summary.is_file():
            raise DataFormatError(f"no summary found at {summary}")
        runs.append((path.name or str(path), read_summary_csv(summary)))

    keys = []
    for _, rec in runs:
        key = (rec["env"], rec["agent"], rec["cost"], rec["vanilla"])
        if key not in keys:
            keys.append(key)
    keys.sort(key=lambda k: (k[0], k[1], k[2], k[3]))

    header = ["env", "agent", "cost", "vanilla"]
    header += [name for name, _ in runs] + ["spread"]
    table = [header]
    for key in keys:
        row = [key[0], key[1], f"{key[2]:g}", str(key[3]).lower()]
        values = []
        for _, rec in runs:
            if (rec["env"], rec["agent"], rec["cost"], rec["vanilla"]) == key:
                row.append(repr(rec["median_best_costed"]))
                values.append(rec["median_best_costed"])
            else:
                row.append("")
        row.append(repr(max(values) - min(values)) if len(values) > 1 else "")
        table.append(row)

    out = Path(args.out) if args.out is not None else Path("comparison.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        csv.writer(fh).writerows(table)
    for row in table:
        print(",".join(row))
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actmeas",
        description="Train and analyse agents that pay for their observations.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run all trials of a configuration",
                             allow_abbrev=False)
    p_train.add_argument("config", help="INI config file")
    p_train.add_argument("--seed", type=int, default=None,
                         help="override run.seed")
    p_train.add_argument("--trials", type=int, default=None,
                         help="override run.trials")
    p_train.add_argument("--out", default=None, help="output root directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved checkpoint greedily",
                            allow_abbrev=False)
    p_eval.add_argument("checkpoint", help="checkpoint file")
    p_eval.add_argument("--episodes", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=None,
                        help="base seed for evaluation episodes")
    p_eval.add_argument("--env", default=None,
                        help="assert the checkpoint matches this environment")
    p_eval.add_argument("--out", default=None, help="directory for trace.csv")
    p_eval.set_defaults(func=cmd_eval)

    p_plot = sub.add_parser("plot", help="render an SVG figure plus its CSV table",
                            allow_abbrev=False)
    p_plot.add_argument("--kind", required=True,
                        choices=["trace-grid", "learning-curve", "cost-bars"])
    p_plot.add_argument("inputs", nargs="+",
                        help="trace/metrics/summary files or run directories")
    p_plot.add_argument("--out", default=None, help="output SVG path")
    p_plot.set_defaults(func=cmd_plot)

    p_cmp = sub.add_parser("compare", help="merge run summaries into one table",
                           allow_abbrev=False)
    p_cmp.add_argument("run_dirs", nargs="+",
                       help="run directories (or summary.csv files)")
    p_cmp.add_argument("--out", default=None, help="output CSV path")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        return args.func(args, extras)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except DataFormatError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ContractError, ActiveMeasureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def entry() -> None:
    sys.exit(main())
