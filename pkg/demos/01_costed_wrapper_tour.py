"""A guided tour of observation costs on the little chain environment.

The wrapper turns any environment into one where each action carries a
second decision: pay to see the next state, or act blind on the last thing
you saw. This script walks one episode by hand and shows exactly what the
agent sees, what it pays, and what the bookkeeping identity guarantees.

Run:  python3 demos/01_costed_wrapper_tour.py
"""

import numpy as np

from activemeasure.envs import make_env
from activemeasure.wrapper import ActionPair, WrapperConfig, WrapperSession


def banner(text):
    print()
    print(text)
    print("-" * len(text))


def main():
    env = make_env("chain")
    cost = 0.25
    session = WrapperSession(env, WrapperConfig(cost=cost), seed=3)

    banner("1. The first observation is free and fresh")
    obs = session.initial_observation()
    print(f"observation = {obs}")
    print("The trailing 1.0 is the freshness flag: this is the live state.")

    banner("2. Measuring: pay the cost, see the new state")
    result = session.step(ActionPair(base_action=0, measure=True))
    print(f"observation   = {result.observation}   (flag 1.0: fresh)")
    print(f"raw reward    = {result.raw_reward}")
    print(f"costed reward = {result.costed_reward}   (= raw - {cost})")

    banner("3. Skipping: free, but you see the old state")
    stale_reference = result.observation[:-1].copy()
    result = session.step(ActionPair(base_action=0, measure=False))
    print(f"observation   = {result.observation}   (flag 0.0: stale)")
    print(f"costed reward = {result.costed_reward}   (= raw, nothing charged)")
    same = np.array_equal(result.observation[:-1], stale_reference)
    print(f"positions equal the last measured state: {same}")

    banner("4. The dynamics advance whether or not you look")
    # Walk the rest of the episode without ever measuring; the hidden state
    # still moves right and the goal still pays out.
    while not session.done:
        r = session.step(ActionPair(base_action=0, measure=False))
        print(f"step: observation={r.observation}  raw={r.raw_reward}  "
              f"terminated={r.terminated}")

    banner("5. The accounting identity")
    # Replay the same episode through a fresh session to total things up.
    session = WrapperSession(env, WrapperConfig(cost=cost), seed=3)
    session.initial_observation()
    plan = [True, False, False, False]
    raw_return, costed_return, count = 0.0, 0.0, 0
    while not session.done:
        measure = plan.pop(0) if plan else False
        r = session.step(ActionPair(0, measure))
        raw_return += r.raw_reward
        costed_return += r.costed_reward
        count += int(r.measured)
    print(f"raw return    = {raw_return}")
    print(f"measurements  = {count}")
    print(f"costed return = {costed_return}")
    print(f"raw - cost*count = {raw_return - cost * count}   (always equal)")

    banner("6. Pass-through mode is the unmodified environment")
    session = WrapperSession(env, WrapperConfig(cost=cost, vanilla=True), seed=3)
    obs = session.initial_observation()
    print(f"observation = {obs}   (no flag, no charge, ever)")


if __name__ == "__main__":
    main()
