"""Minimal dense-network engine: forward pass, losses, reverse-mode
gradients, and Adam. Everything is float64 so gradients can be validated
against finite differences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray    # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ValueError("bias length must match weight rows")


class DenseNet:
    """A chain of affine layers with elementwise activations."""

    def __init__(self, layers: list[Layer]):
        for prev, cur in zip(layers, layers[1:]):
            if cur.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer input dim {cur.weight.shape[1]} != previous output "
                    f"dim {prev.weight.shape[0]}"
                )
        self.layers = layers

    @classmethod
    def create(cls, dims: list[int], rng: np.random.Generator) -> "DenseNet":
        """He-uniform weights, zero biases; ReLU on hidden layers, identity last."""
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
            limit = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            act = "identity" if i == len(dims) - 2 else "relu"
            layers.append(Layer(w, np.zeros(fan_out), act))
        return cls(layers)

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].weight.shape[1]] + [l.weight.shape[0] for l in self.layers]

    @property
    def n_params(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.forward_cached(x)
        return out

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping the pre-activation inputs needed by backprop."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layers[0].weight.shape[1]:
            raise ValueError(
                f"input dim {x.shape[-1]} != layer dim {self.layers[0].weight.shape[1]}"
            )
        cache = []
        a = x
        for layer in self.layers:
            z = a @ layer.weight.T + layer.bias
            cache.append((a, z))
            a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        return a, cache

    def backprop(self, cache, grad_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns ([(dW, db) per layer], d(loss)/d(input)). The ReLU
        subgradient at 0 is taken as 0.
        """
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        g = np.asarray(grad_out, dtype=float)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            a_in, z = cache[i]
            if layer.activation == "relu":
                g = g * (z > 0.0)
            if g.ndim == 1:
                dw = np.outer(g, a_in)
                db = g.copy()
            else:
                dw = g.T @ a_in
                db = g.sum(axis=0)
            grads[i] = (dw, db)
            g = g @ layer.weight
        return grads, g


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    return net.forward(x)


def loss_mse(pred: np.ndarray, target: np.ndarray) -> float:
    """(1/N) sum of squared errors per sample, averaged over a batch."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def loss_smooth(pred: np.ndarray, alpha: float) -> float:
    """Smoothness penalty (alpha/(N-1)) * sum of squared increments."""
    pred = np.asarray(pred, dtype=float)
    d = np.diff(pred, axis=-1)
    n = pred.shape[-1]
    per_sample = alpha / (n - 1) * np.sum(d**2, axis=-1)
    return float(np.mean(per_sample))


@dataclass
class LossSpec:
    """MSE plus optional smoothness regularization on the prediction."""

    alpha: float = 0.0


def loss_value(pred: np.ndarray, target: np.ndarray, spec: LossSpec) -> float:
    total = loss_mse(pred, target)
    if spec.alpha != 0.0:
        total += loss_smooth(pred, spec.alpha)
    return total


def loss_grad(pred: np.ndarray, target: np.ndarray, spec: LossSpec) -> np.ndarray:
    """d(loss)/d(pred) for loss_value, batch-mean convention included."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    batch = 1 if pred.ndim == 1 else pred.shape[0]
    n = pred.shape[-1]
    g = 2.0 * (pred - target) / (n * batch)
    if spec.alpha != 0.0:
        d = np.diff(pred, axis=-1)
        gs = np.zeros_like(pred)
        gs[..., :-1] -= d
        gs[..., 1:] += d
        g = g + (2.0 * spec.alpha / ((n - 1) * batch)) * gs
    return g


def backward(net: DenseNet, x: np.ndarray, target: np.ndarray, spec: LossSpec = LossSpec()):
    """Exact gradients of loss_value(net(x), target) w.r.t. all weights and biases."""
    pred, cache = net.forward_cached(x)
    grads, _ = net.backprop(cache, loss_grad(pred, target, spec))
    return grads


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the network parameters."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_net(cls, net: DenseNet, lr: float = 1e-3) -> "AdamState":
        state = cls(lr=lr)
        for layer in net.layers:
            state.m.append((np.zeros_like(layer.weight), np.zeros_like(layer.bias)))
            state.v.append((np.zeros_like(layer.weight), np.zeros_like(layer.bias)))
        return state


def adam_step(state: AdamState, net: DenseNet, grads) -> None:
    """One bias-corrected Adam update of the network parameters, in place."""
    if len(grads) != len(net.layers):
        raise ValueError("gradient list does not match network layers")
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for i, layer in enumerate(net.layers):
        for params, g, m, v in (
            (layer.weight, grads[i][0], state.m[i][0], state.v[i][0]),
            (layer.bias, grads[i][1], state.m[i][1], state.v[i][1]),
        ):
            if g.shape != params.shape:
                raise ValueError("gradient shape does not match parameter shape")
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            params -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
