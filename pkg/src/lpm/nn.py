"""Small dense-network toolkit: MLP forward/backward, Adam, and losses.

Everything is float64 numpy. Models hold their parameters as a flat list
``[W0, b0, W1, b1, ...]`` with ``W_k`` shaped ``(fan_in, fan_out)`` so that a
batch ``x`` of shape ``(n, fan_in)`` maps to ``x @ W_k + b_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

LEAKY_SLOPE = 0.01
DEFAULT_MSE_FLOOR = 1e-12

HIDDEN_ACTIVATIONS = ("relu", "leaky_relu", "identity")
OUTPUT_ACTIVATIONS = ("identity", "sigmoid")


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(root_seed: int, n: int) -> list[int]:
    """Derive ``n`` independent integer seeds from one root via SeedSequence."""
    children = np.random.SeedSequence(root_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind == "identity":
        return z
    if kind == "sigmoid":
        # split form avoids overflow in exp for large |z|
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    raise ValueError(f"unknown activation {kind!r}")


def _activation_grad(z, a, kind):
    """d act / d z, given pre-activation ``z`` and activation ``a``."""
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind == "identity":
        return np.ones_like(z)
    if kind == "sigmoid":
        return a * (1.0 - a)
    raise ValueError(f"unknown activation {kind!r}")


@dataclass
class Mlp:
    layer_sizes: tuple[int, ...]
    params: list[np.ndarray]
    hidden_activation: str = "relu"
    output_activation: str = "identity"

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ValueError(f"bad layer sizes {self.layer_sizes}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if len(self.params) != 2 * (len(self.layer_sizes) - 1):
            raise ValueError("parameter count does not match layer sizes")
        for k, (fan_in, fan_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            W, b = self.params[2 * k], self.params[2 * k + 1]
            if W.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ValueError(f"layer {k}: expected W {(fan_in, fan_out)} and b {(fan_out,)}, "
                                 f"got {W.shape} and {b.shape}")

    @classmethod
    def init(cls, layer_sizes: Sequence[int], rng: np.random.Generator,
             hidden_activation="relu", output_activation="identity") -> "Mlp":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
        params = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            params.append(rng.uniform(-bound, bound, size=(fan_out,)))
        return cls(tuple(layer_sizes), params, hidden_activation, output_activation)

    @classmethod
    def zeros(cls, layer_sizes, hidden_activation="relu", output_activation="identity"):
        params = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            params += [np.zeros((fan_in, fan_out)), np.zeros(fan_out)]
        return cls(tuple(layer_sizes), params, hidden_activation, output_activation)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, [p.copy() for p in self.params],
                   self.hidden_activation, self.output_activation)

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[-1] != self.in_dim:
            raise ValueError(f"input has shape {x.shape}, model expects last dim {self.in_dim}")
        return x

    def _run(self, x):
        zs, acts = [], [x]
        h = x
        for k in range(self.n_layers):
            z = h @ self.params[2 * k] + self.params[2 * k + 1]
            kind = self.output_activation if k == self.n_layers - 1 else self.hidden_activation
            h = _activate(z, kind)
            zs.append(z)
            acts.append(h)
        return zs, acts

    def forward(self, x) -> np.ndarray:
        """Map a vector ``(in_dim,)`` or batch ``(n, in_dim)`` to outputs."""
        x = self._check_input(x)
        return self._run(x)[1][-1]

    def backward(self, x, grad_out) -> list[np.ndarray]:
        """Gradients of a loss w.r.t. every parameter, given dLoss/dOutput.

        For a batch the per-sample gradients are summed. Parameters are not
        modified.
        """
        x = self._check_input(x)
        grad_out = np.asarray(grad_out, dtype=np.float64)
        expected = x.shape[:-1] + (self.out_dim,)
        if grad_out.shape != expected:
            raise ValueError(f"output gradient has shape {grad_out.shape}, expected {expected}")
        single = x.ndim == 1
        if single:
            x, grad_out = x[None, :], grad_out[None, :]
        zs, acts = self._run(x)
        grads: list[np.ndarray] = [None] * len(self.params)  # type: ignore[list-item]
        delta = grad_out
        for k in reversed(range(self.n_layers)):
            kind = self.output_activation if k == self.n_layers - 1 else self.hidden_activation
            delta = delta * _activation_grad(zs[k], acts[k + 1], kind)
            grads[2 * k] = acts[k].T @ delta
            grads[2 * k + 1] = delta.sum(axis=0)
            if k > 0:
                delta = delta @ self.params[2 * k].T
        return grads


def mlp_forward(model: Mlp, x) -> np.ndarray:
    return model.forward(x)


def mlp_backward(model: Mlp, x, grad_out) -> list[np.ndarray]:
    return model.backward(x, grad_out)


@dataclass
class Adam:
    """Adam with bias correction. ``step`` updates the parameter arrays in place."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ValueError("params and grads differ in length")
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ValueError(f"param {i} has shape {p.shape}, grad has {g.shape}")
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {i}; step rejected")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        elif len(self.m) != len(params) or any(m.shape != p.shape for m, p in zip(self.m, params)):
            raise ValueError("optimizer state does not match parameters")
        self.step_count += 1
        t = self.step_count
        lr_t = self.learning_rate * math.sqrt(1 - self.beta2 ** t) / (1 - self.beta1 ** t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            # eps scaled so this matches the textbook form m_hat / (sqrt(v_hat) + eps)
            p -= lr_t * m / (np.sqrt(v) + self.eps * math.sqrt(1 - self.beta2 ** t))


def adam_step(state: Adam, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
    state.step(params, grads)


def log_mse(target, prediction, floor: float = DEFAULT_MSE_FLOOR):
    """ln(max(floor, mean squared difference)) over the last axis."""
    if not floor > 0:
        raise ValueError("floor must be positive")
    target = np.asarray(target, dtype=np.float64)
    prediction = np.asarray(prediction, dtype=np.float64)
    if target.shape != prediction.shape:
        raise ValueError(f"shape mismatch: {target.shape} vs {prediction.shape}")
    mse = np.mean((target - prediction) ** 2, axis=-1)
    out = np.log(np.maximum(mse, floor))
    return float(out) if out.ndim == 0 else out


def mse(target, prediction):
    target = np.asarray(target, dtype=np.float64)
    prediction = np.asarray(prediction, dtype=np.float64)
    if target.shape != prediction.shape:
        raise ValueError(f"shape mismatch: {target.shape} vs {prediction.shape}")
    out = np.mean((target - prediction) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def one_hot(index: int, n: int) -> np.ndarray:
    if not 0 <= index < n:
        raise ValueError(f"action {index} out of range for {n} actions")
    v = np.zeros(n)
    v[index] = 1.0
    return v


def random_mlp_case(rng: np.random.Generator, max_depth: int = 3, max_width: int = 12):
    """A random (model, input, target) triple for gradient checks.

    Inputs are redrawn until no hidden pre-activation lies within 1e-3 of a
    ReLU kink, where finite differences are not meaningful.
    """
    depth = int(rng.integers(1, max_depth + 1))
    sizes = [int(s) for s in rng.integers(1, max_width + 1, size=depth + 1)]
    hidden = str(rng.choice(HIDDEN_ACTIVATIONS))
    output = str(rng.choice(OUTPUT_ACTIVATIONS))
    model = Mlp.init(sizes, rng, hidden, output)
    batch = int(rng.integers(1, 5))
    while True:
        x = rng.normal(size=(batch, sizes[0]))
        zs, _ = model._run(x)
        if hidden == "identity" or all(np.min(np.abs(z)) > 1e-3 for z in zs[:-1]):
            break
    target = rng.uniform(size=(batch, sizes[-1]))
    return model, x, target


def gradient_check(model: Mlp, x, target, h: float = 1e-5) -> float:
    """Worst relative error between backprop and central differences.

    The loss is half the summed squared error. Relative error uses
    ``max(|analytic|, |numeric|, 1e-6)`` as the denominator so that
    near-zero components are compared on an absolute scale.
    """
    def loss(m):
        return 0.5 * float(np.sum((m.forward(x) - target) ** 2))

    analytic = model.backward(x, model.forward(x) - target)
    worst = 0.0
    probe = model.copy()
    for k, p in enumerate(probe.params):
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = loss(probe)
            flat[i] = old - h
            down = loss(probe)
            flat[i] = old
            numeric = (up - down) / (2 * h)
            a = analytic[k].reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(abs(a), abs(numeric), 1e-6))
    return worst
