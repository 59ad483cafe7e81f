"""Check every analytic gradient in the package against finite differences.

The networks are plain numpy with hand-written backward passes, so the one
thing worth distrusting is the calculus. This script perturbs each
parameter of a dense dueling network and a recurrent Q-network, compares
the analytic gradient of a Huber training loss with a central difference,
and prints the worst relative error found.

Run:  python3 demos/02_gradient_check.py
"""

import numpy as np

from activemeasure.agents import DuelingQNetwork, RecurrentQNetwork
from activemeasure.nets import huber_loss


def central_difference(f, params, eps=1e-6):
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi = f()
            p[idx] = orig - eps
            lo = f()
            p[idx] = orig
            g[idx] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def worst_relative_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.abs(a) + np.abs(n), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst


def check_dense(seed):
    rng = np.random.default_rng(seed)
    net = DuelingQNetwork(obs_dim=3, num_actions=4, hidden=(8, 6), rng=rng)
    x = rng.normal(size=(5, 3))
    actions = rng.integers(0, 4, size=5)
    targets = rng.normal(size=5)

    def loss():
        q = net.q_values(x)
        taken = q[np.arange(5), actions]
        value, _ = huber_loss(taken, targets)
        return value

    q, cache = net.forward(x)
    taken = q[np.arange(5), actions]
    _, dtaken = huber_loss(taken, targets)
    dq = np.zeros_like(q)
    dq[np.arange(5), actions] = dtaken
    tape = net.backward(cache, dq)
    numeric = central_difference(loss, net.params())
    return worst_relative_error(tape.grads, numeric)


def check_recurrent(seed):
    rng = np.random.default_rng(seed)
    net = RecurrentQNetwork(obs_dim=2, num_actions=3, hidden_dim=5, rng=rng)
    T, B = 4, 3
    obs = rng.normal(size=(T, B, 2))
    actions = rng.integers(0, 3, size=(T, B))
    targets = rng.normal(size=(T, B))
    h0 = np.zeros((B, 5))

    def loss():
        q, _ = net.forward_sequence(obs, h0)
        t_idx = np.arange(T)[:, None]
        b_idx = np.arange(B)[None, :]
        taken = q[t_idx, b_idx, actions]
        value, _ = huber_loss((taken - targets).ravel(), np.zeros(T * B))
        return value

    q, cache = net.forward_sequence(obs, h0)
    t_idx = np.arange(T)[:, None]
    b_idx = np.arange(B)[None, :]
    taken = q[t_idx, b_idx, actions]
    _, flat = huber_loss((taken - targets).ravel(), np.zeros(T * B))
    dq = np.zeros_like(q)
    dq[t_idx, b_idx, actions] = flat.reshape(T, B)
    tape = net.backward_sequence(cache, dq)
    numeric = central_difference(loss, net.params())
    return worst_relative_error(tape.grads, numeric)


def main():
    print("Comparing analytic gradients with central finite differences.")
    print("(relative error; anything below 1e-6 means the calculus is right)")
    print()
    for seed in range(3):
        dense = check_dense(seed)
        recur = check_recurrent(seed)
        print(f"seed {seed}:  dense dueling {dense:.2e}   recurrent {recur:.2e}")
    print()
    print("The test suite repeats this over 20 random parameterizations each.")


if __name__ == "__main__":
    main()
