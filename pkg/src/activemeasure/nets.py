"""Minimal differentiable approximators in double precision numpy.

Dense feedforward networks and an Elman recurrent cell with exact
reverse-mode gradients, a bias-corrected Adam optimizer, Huber loss, and a
versioned parameter snapshot format. Forward passes are pure functions of
(parameters, input); episode or training state lives with the caller.
"""

from __future__ import annotations

import json
import math
import zipfile

import numpy as np

from .errors import CheckpointError, ContractError

SNAPSHOT_FORMAT_VERSION = 1


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "linear":
        return z
    raise ContractError(f"unknown activation {name!r}")


def _activation_grad(name: str, out: np.ndarray) -> np.ndarray:
    # Derivative expressed through the activation output.
    if name == "tanh":
        return 1.0 - out * out
    if name == "relu":
        return (out > 0.0).astype(float)
    return np.ones_like(out)


class GradientTape:
    """Per-parameter gradient arrays, aligned with a network's params() order."""

    __slots__ = ("grads",)

    def __init__(self, grads):
        self.grads = list(grads)

    def __iter__(self):
        return iter(self.grads)

    def __len__(self):
        return len(self.grads)

    @classmethod
    def zeros_like(cls, params) -> "GradientTape":
        return cls([np.zeros_like(p) for p in params])


class DenseNet:
    """Fully connected stack: affine layers with elementwise activations.

    ``layer_sizes`` gives [input, hidden..., output] widths. Hidden layers use
    ``hidden_activation``; the final layer uses ``output_activation``. Weights
    are fan-in-scaled uniform, drawn from the given generator.
    """

    def __init__(
        self,
        layer_sizes,
        rng: np.random.Generator,
        hidden_activation: str = "tanh",
        output_activation: str = "linear",
    ):
        if len(layer_sizes) < 2:
            raise ContractError("DenseNet needs at least an input and an output size")
        self.layer_sizes = [int(s) for s in layer_sizes]
        self.hidden_activation = hidden_activation
        self.output_activation = output_activation
        self.W: list[np.ndarray] = []
        self.b: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.W.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.b.append(rng.uniform(-bound, bound, size=fan_out))

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.W, self.b):
            out.append(W)
            out.append(b)
        return out

    def _layer_activation(self, index: int) -> str:
        return (
            self.output_activation if index == len(self.W) - 1 else self.hidden_activation
        )

    def forward(self, x) -> tuple[np.ndarray, tuple]:
        """Evaluate the network; returns (output, cache for backward)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.ndim != 2 or h.shape[1] != self.layer_sizes[0]:
            raise ContractError(
                f"input width {x.shape} incompatible with first layer "
                f"size {self.layer_sizes[0]}"
            )
        outs = [h]
        for i, (W, b) in enumerate(zip(self.W, self.b)):
            h = _activate(self._layer_activation(i), h @ W + b)
            outs.append(h)
        y = h[0] if single else h
        return y, (outs, single)

    def backward(self, cache, grad_out) -> tuple[GradientTape, np.ndarray]:
        """Reverse-mode pass; returns (parameter tape, gradient w.r.t. input)."""
        outs, single = cache
        g = np.asarray(grad_out, dtype=float)
        if single:
            g = g[None, :]
        if g.shape != outs[-1].shape:
            raise ContractError(
                f"output grad shape {grad_out.shape} does not match cached "
                f"forward output {outs[-1].shape}"
            )
        grads: list[np.ndarray | None] = [None] * (2 * len(self.W))
        for i in reversed(range(len(self.W))):
            g = g * _activation_grad(self._layer_activation(i), outs[i + 1])
            grads[2 * i] = outs[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.W[i].T
        dx = g[0] if single else g
        return GradientTape(grads), dx


class RecurrentCell:
    """Elman cell: h_t = tanh(x_t Wx + h_{t-1} Wh + b)."""

    def __init__(self, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = int(input_dim)
        self.hidden_dim = int(hidden_dim)
        bx = 1.0 / math.sqrt(self.input_dim)
        bh = 1.0 / math.sqrt(self.hidden_dim)
        self.Wx = rng.uniform(-bx, bx, size=(self.input_dim, self.hidden_dim))
        self.Wh = rng.uniform(-bh, bh, size=(self.hidden_dim, self.hidden_dim))
        self.b = rng.uniform(-bh, bh, size=self.hidden_dim)

    def params(self) -> list[np.ndarray]:
        return [self.Wx, self.Wh, self.b]

    def initial_hidden(self) -> np.ndarray:
        return np.zeros(self.hidden_dim)

    def step(self, x, h) -> np.ndarray:
        return np.tanh(x @ self.Wx + h @ self.Wh + self.b)

    def forward(self, xs, h0) -> tuple[np.ndarray, tuple]:
        """Run the cell over a sequence; xs is (T, input) or (T, B, input)."""
        xs = np.asarray(xs, dtype=float)
        if xs.ndim not in (2, 3) or xs.shape[0] == 0:
            raise ContractError("sequence must be nonempty, (T, input) or (T, B, input)")
        if xs.shape[-1] != self.input_dim:
            raise ContractError(
                f"input width {xs.shape[-1]} != cell input dim {self.input_dim}"
            )
        h = np.asarray(h0, dtype=float)
        if h.shape[-1] != self.hidden_dim:
            raise ContractError(
                f"hidden width {h.shape[-1]} != cell hidden dim {self.hidden_dim}"
            )
        hs = []
        for t in range(xs.shape[0]):
            h = np.tanh(xs[t] @ self.Wx + h @ self.Wh + self.b)
            hs.append(h)
        stacked = np.stack(hs)
        return stacked, (xs, np.asarray(h0, dtype=float), stacked)

    def backward(self, cache, grad_hidden) -> tuple[GradientTape, np.ndarray, np.ndarray]:
        """Backpropagation through time over the cached sequence.

        ``grad_hidden`` holds the loss gradient at every step's hidden output.
        Returns (tape, gradient w.r.t. inputs, gradient w.r.t. h0).
        """
        xs, h0, hs = cache
        dhs = np.asarray(grad_hidden, dtype=float)
        if dhs.shape != hs.shape:
            raise ContractError(
                f"hidden grad shape {dhs.shape} does not match cached {hs.shape}"
            )
        dWx = np.zeros_like(self.Wx)
        dWh = np.zeros_like(self.Wh)
        db = np.zeros_like(self.b)
        dxs = np.zeros_like(xs)
        carry = np.zeros_like(h0)
        for t in reversed(range(xs.shape[0])):
            h_t = hs[t]
            h_prev = hs[t - 1] if t > 0 else h0
            dpre = (dhs[t] + carry) * (1.0 - h_t * h_t)
            if dpre.ndim == 1:
                dWx += np.outer(xs[t], dpre)
                dWh += np.outer(h_prev, dpre)
                db += dpre
            else:
                dWx += xs[t].T @ dpre
                dWh += h_prev.T @ dpre
                db += dpre.sum(axis=0)
            dxs[t] = dpre @ self.Wx.T
            carry = dpre @ self.Wh.T
        return GradientTape([dWx, dWh, db]), dxs, carry


class Adam:
    """Bias-corrected Adam over an explicit parameter list; updates in place."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, tape) -> None:
        grads = list(tape)
        if len(grads) != len(self.params):
            raise ContractError(
                f"gradient count {len(grads)} != parameter count {len(self.params)}"
            )
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ContractError(f"gradient shape {g.shape} != parameter {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def huber_loss(pred, target, delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean-reduced Huber loss and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    err = pred - target
    abs_err = np.abs(err)
    quadratic = abs_err <= delta
    per_elem = np.where(
        quadratic, 0.5 * err * err, delta * (abs_err - 0.5 * delta)
    )
    loss = float(per_elem.mean())
    grad = np.clip(err, -delta, delta) / err.size
    return loss, grad


def save_params(path, params, meta: dict | None = None) -> None:
    """Write parameters plus a JSON header to a single .npz-formatted file."""
    header = dict(meta or {})
    header["format_version"] = SNAPSHOT_FORMAT_VERSION
    header["shapes"] = [list(p.shape) for p in params]
    arrays = {f"p{i:03d}": np.asarray(p, dtype=float) for i, p in enumerate(params)}
    with open(path, "wb") as f:
        np.savez(f, header=np.array(json.dumps(header)), **arrays)


def load_params(path) -> tuple[dict, list[np.ndarray]]:
    """Read a snapshot written by :func:`save_params`."""
    try:
        with np.load(path, allow_pickle=False) as data:
            try:
                header = json.loads(str(data["header"][()]))
            except (KeyError, json.JSONDecodeError) as exc:
                raise CheckpointError(f"{path}: missing or corrupt header") from exc
            if header.get("format_version") != SNAPSHOT_FORMAT_VERSION:
                raise CheckpointError(
                    f"{path}: unsupported snapshot version {header.get('format_version')}"
                )
            keys = sorted(k for k in data.files if k.startswith("p"))
            params = [data[k] for k in keys]
    except OSError as exc:
        raise CheckpointError(f"cannot read snapshot {path}: {exc}") from exc
    except (zipfile.BadZipFile, ValueError) as exc:
        raise CheckpointError(f"{path}: not a parameter snapshot") from exc
    shapes = [list(p.shape) for p in params]
    if shapes != header.get("shapes"):
        raise CheckpointError(f"{path}: header shapes do not match stored arrays")
    return header, params


def assign_params(params, arrays) -> None:
    """Copy ``arrays`` into ``params`` elementwise, enforcing shapes."""
    arrays = list(arrays)
    if len(arrays) != len(params):
        raise CheckpointError(
            f"parameter count mismatch: have {len(params)}, snapshot {len(arrays)}"
        )
    for p, a in zip(params, arrays):
        if p.shape != a.shape:
            raise CheckpointError(f"parameter shape {p.shape} != snapshot {a.shape}")
        p[...] = a
