"""Minimal dense layers, stable binary cross-entropy on logits, and Adam.

Single-sample forward/backward; batching is an outer loop with gradients
averaged over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ShapeMismatchError


class Activation(Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray   # (out,)
    activation: Activation


def init_params(shape, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    if fan_in < 1:
        raise ValueError("fan_in must be >= 1")
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_dense(out_dim: int, in_dim: int, activation: Activation, rng) -> DenseLayer:
    return DenseLayer(init_params((out_dim, in_dim), in_dim, rng), np.zeros(out_dim), activation)


def dense_forward(layer: DenseLayer, x: np.ndarray):
    """Returns (y, cache); cache holds the input and pre-activation."""
    if x.shape != (layer.weights.shape[1],):
        raise ShapeMismatchError(
            f"input shape {x.shape} != ({layer.weights.shape[1]},)"
        )
    pre = layer.weights @ x + layer.biases
    if layer.activation is Activation.RELU:
        y = np.maximum(pre, 0.0)
    else:
        y = pre
    return y, (x, pre)


def dense_backward(layer: DenseLayer, cache, upstream: np.ndarray):
    """Returns (d_weights, d_biases, d_input)."""
    x, pre = cache
    if upstream.shape != (layer.weights.shape[0],):
        raise ShapeMismatchError(
            f"upstream shape {upstream.shape} != ({layer.weights.shape[0]},)"
        )
    if layer.activation is Activation.RELU:
        g = np.where(pre > 0.0, upstream, 0.0)
    else:
        g = upstream
    return np.outer(g, x), g.copy(), layer.weights.T @ g


def bce_with_logits(logit: float, label: int):
    """Numerically stable BCE; returns (loss, d_loss/d_logit).

    loss = max(z, 0) - z*y + log(1 + exp(-|z|)); gradient = sigmoid(z) - y.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    z = float(logit)
    loss = max(z, 0.0) - z * label + math.log1p(math.exp(-abs(z)))
    if z >= 0:
        sig = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        sig = e / (1.0 + e)
    return loss, sig - label


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_size(cls, size: int, lr: float = 0.01) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), lr=lr)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ShapeMismatchError(
            f"params {params.shape}, grads {grads.shape}, "
            f"moments {state.first_moment.shape} must all match"
        )
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.epsilon)
    return new_params, new_state
