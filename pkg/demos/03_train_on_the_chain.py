"""Train a small agent on the chain environment and read the run artifacts.

The chain is deliberately trivial: walk right five times, collect 1.0. Its
point is that measuring is *worthless* there (the dynamics are
deterministic and the walk works blind), so the optimal costed return is
1.0 at every cost and an agent that learns to skip measurements reaches it.
A complete multi-trial run finishes in a few seconds, which makes this the
best place to see the harness's files without waiting on CartPole.

Run:  python3 demos/03_train_on_the_chain.py
"""

from pathlib import Path
from tempfile import TemporaryDirectory

from activemeasure.agents import AgentConfig
from activemeasure.harness import RunConfig, read_trace_csv, run_experiment


def main():
    with TemporaryDirectory() as tmp:
        cfg = RunConfig(
            env_name="chain",
            cost=0.2,
            vanilla=False,
            agent=AgentConfig(hidden=(32, 32), replay_warmup=64,
                              batch_size=32, eps_decay_steps=2_000),
            trials=3,
            train_steps=5_000,
            eval_every=500,
            eval_episodes=10,
            base_seed=0,
            out_dir=Path(tmp),
        )
        print(f"Training {cfg.trials} trials of {cfg.train_steps} steps "
              f"on the chain at cost {cfg.cost} ...")
        result = run_experiment(
            cfg,
            progress=lambda t: print(
                f"  trial {t.trial}: best costed {t.best_median_costed:.3f} "
                f"(measure fraction {t.best_point.measure_fraction:.2f})"
            ),
        )

        s = result.summary
        print()
        print(f"median best costed return over trials: {s.median_best_costed:.3f}")
        print("(the analytic optimum is 1.0 at every cost: skipping is free)")

        run_dir = result.run_dir
        print()
        print(f"artifacts under {run_dir.name}/:")
        for path in sorted(run_dir.rglob("*")):
            if path.is_file():
                print(f"  {path.relative_to(run_dir)}")

        print()
        print("measurement traces of trial 0's best policy (1=measured):")
        for row in read_trace_csv(run_dir / "trial-0" / "trace.csv")[:5]:
            print("  " + "".join(str(m) for m in row))


if __name__ == "__main__":
    main()
