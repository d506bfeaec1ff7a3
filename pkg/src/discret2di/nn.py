"""Minimal fully connected network with hand-written reverse mode.

Hidden layers use tanh, the output layer is linear. forward() records the
per-layer pre-activations on a tape; backward() replays the tape to produce
exact gradients together with the gradient w.r.t. the input batch, which the
autoencoder needs to chain encoder, sampling and decoder stages.
Matrices are row-major [batch x features].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    """Raised when parameters or gradients stop being finite."""


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class Mlp:
    """Stack of affine layers; tanh between them, identity at the end."""

    sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def create(cls, sizes: list[int], rng: np.random.Generator) -> "Mlp":
        if len(sizes) < 2:
            raise ShapeError("need at least an input and an output size")
        weights = [_glorot(rng, a, b) for a, b in zip(sizes[:-1], sizes[1:])]
        biases = [np.zeros(b) for b in sizes[1:]]
        return cls(list(sizes), weights, biases)

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "Mlp":
        return Mlp(list(self.sizes), [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        sizes = [int(s) for s in d["sizes"]]
        weights = [
            np.asarray(w, dtype=np.float64).reshape(a, b)
            for w, a, b in zip(d["weights"], sizes[:-1], sizes[1:])
        ]
        biases = [np.asarray(b, dtype=np.float64) for b in d["biases"]]
        return cls(sizes, weights, biases)


@dataclass
class Tape:
    """Intermediates of one forward pass, consumed by backward()."""

    inputs: np.ndarray
    # Activation fed into layer i (inputs for i=0, tanh outputs after).
    layer_inputs: list[np.ndarray]
    # Pre-activation output of each layer.
    pre_activations: list[np.ndarray]
    net: "Mlp"


@dataclass
class Gradients:
    """Parameter gradients, shape-congruent with the owning Mlp."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, net: Mlp) -> "Gradients":
        return cls([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])

    def scale(self, factor: float) -> "Gradients":
        return Gradients([w * factor for w in self.weights], [b * factor for b in self.biases])

    def add_(self, other: "Gradients") -> "Gradients":
        for a, b in zip(self.weights, other.weights):
            a += b
        for a, b in zip(self.biases, other.biases):
            a += b
        return self


def forward(net: Mlp, batch: np.ndarray) -> tuple[np.ndarray, Tape]:
    """Affine + tanh composition; returns the output batch and a tape."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.in_dim:
        raise ShapeError(f"expected input shape (B, {net.in_dim}), got {batch.shape}")
    x = batch
    layer_inputs = []
    pre_activations = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        layer_inputs.append(x)
        z = x @ w + b
        pre_activations.append(z)
        x = z if i == last else np.tanh(z)
    return x, Tape(batch, layer_inputs, pre_activations, net)


def backward(tape: Tape, grad_output: np.ndarray) -> tuple[Gradients, np.ndarray]:
    """Reverse-mode gradients for the traced forward pass.

    Returns (parameter gradients, gradient w.r.t. the input batch).
    """
    net = tape.net
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != tape.pre_activations[-1].shape:
        raise ShapeError(
            f"grad shape {grad_output.shape} does not match output "
            f"{tape.pre_activations[-1].shape}"
        )
    grads = Gradients.zeros_like(net)
    delta = grad_output
    last = len(net.weights) - 1
    for i in range(last, -1, -1):
        if i != last:
            # d tanh(z) = 1 - tanh(z)^2; tanh(z) was the next layer's input.
            delta = delta * (1.0 - tape.layer_inputs[i + 1] ** 2)
        grads.weights[i] = tape.layer_inputs[i].T @ delta
        grads.biases[i] = delta.sum(axis=0)
        delta = delta @ net.weights[i].T
    return grads, delta


@dataclass
class AdamState:
    """Bias-corrected adaptive-moment optimizer state for one Mlp."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_weights: list[np.ndarray] = field(default_factory=list)
    v_weights: list[np.ndarray] = field(default_factory=list)
    m_biases: list[np.ndarray] = field(default_factory=list)
    v_biases: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def create(cls, net: Mlp, lr: float = 1e-3) -> "AdamState":
        return cls(
            lr=lr,
            m_weights=[np.zeros_like(w) for w in net.weights],
            v_weights=[np.zeros_like(w) for w in net.weights],
            m_biases=[np.zeros_like(b) for b in net.biases],
            v_biases=[np.zeros_like(b) for b in net.biases],
        )


def adam_step(net: Mlp, grads: Gradients, state: AdamState) -> None:
    """One in-place Adam update of net; advances the state's step counter."""
    for g in grads.weights + grads.biases:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient entries")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t

    def update(param, grad, m, v):
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        param -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)

    for w, g, m, v in zip(net.weights, grads.weights, state.m_weights, state.v_weights):
        update(w, g, m, v)
    for b, g, m, v in zip(net.biases, grads.biases, state.m_biases, state.v_biases):
        update(b, g, m, v)
    for p in net.weights + net.biases:
        if not np.all(np.isfinite(p)):
            raise NonFiniteError("parameters became non-finite after update")
