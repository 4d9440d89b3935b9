"""Dense MLPs with sine hidden activation, He init, manual backprop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OUTPUT_ACTIVATIONS = ("linear", "relu", "sine")


@dataclass(frozen=True)
class MlpConfig:
    input_size: int
    depth: int                      # number of hidden layers
    width: int
    output_size: int
    output_activation: str = "linear"
    sine_frequency: float = 1.0

    def __post_init__(self):
        if self.depth < 1 or self.width < 1 or self.input_size < 1 or self.output_size < 1:
            raise ValueError(f"invalid MLP sizes: {self}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    def layer_sizes(self) -> list[tuple[int, int]]:
        dims = [self.input_size] + [self.width] * self.depth + [self.output_size]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class Mlp:
    config: MlpConfig
    weights: list[np.ndarray]   # each (fan_in, fan_out)
    biases: list[np.ndarray]    # each (fan_out,)

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def he_init(config: MlpConfig, seed_or_rng) -> Mlp:
    """Weights ~ N(0, 2/fan_in), biases zero."""
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) \
        else np.random.default_rng(seed_or_rng)
    weights, biases = [], []
    for fan_in, fan_out in config.layer_sizes():
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(config=config, weights=weights, biases=biases)


def forward(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    y, _ = forward_tape(mlp, x)
    return y


def forward_tape(mlp: Mlp, x: np.ndarray):
    """Row-batched forward pass; returns (output, tape for backward)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cfg = mlp.config
    if x.shape[1] != cfg.input_size:
        raise ValueError(f"input width {x.shape[1]}, expected {cfg.input_size}")
    w0 = cfg.sine_frequency
    hs = [x]       # layer inputs
    zs = []        # pre-activations
    h = x
    last = len(mlp.weights) - 1
    for k, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w + b
        zs.append(z)
        if k < last:
            h = np.sin(w0 * z)
        elif cfg.output_activation == "sine":
            h = np.sin(w0 * z)
        elif cfg.output_activation == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = z
        hs.append(h)
    return h, (hs, zs)


def backward(mlp: Mlp, tape, grad_output: np.ndarray):
    """Reverse pass. Returns (grad wrt input, [gW0, gb0, gW1, gb1, ...])."""
    if tape is None:
        raise RuntimeError("backward called without a recorded forward tape")
    hs, zs = tape
    cfg = mlp.config
    w0 = cfg.sine_frequency
    g = np.atleast_2d(np.asarray(grad_output, dtype=np.float64))
    last = len(mlp.weights) - 1
    param_grads = [None] * (2 * len(mlp.weights))
    for k in range(last, -1, -1):
        z = zs[k]
        if k < last or cfg.output_activation == "sine":
            gz = g * (w0 * np.cos(w0 * z))
        elif cfg.output_activation == "relu":
            gz = g * (z > 0.0)
        else:
            gz = g
        param_grads[2 * k] = hs[k].T @ gz
        param_grads[2 * k + 1] = gz.sum(axis=0)
        g = gz @ mlp.weights[k].T
    return g, param_grads
