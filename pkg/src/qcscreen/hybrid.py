"""Hybrid quantum-classical binary classifier.

Pipeline per sample: a two-layer pre-network maps the feature vector to one
angle per qubit; those angles drive an RX encoding layer, followed by the
candidate circuit and an open CX chain; the per-qubit Z expectations are
combined with a learnable residual bypass z_res = z_quantum + alpha *
z_classical (optional) and fed to a two-layer post-network that emits one
logit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .gradients import execute, param_shift_jacobian
from .neural import (
    Activation,
    DenseLayer,
    bce_with_logits,
    dense_backward,
    dense_forward,
    init_dense,
    sigmoid,
)
from .qasm import CircuitIR, Trainable


@dataclass(frozen=True)
class HybridConfig:
    num_features: int = 28
    hidden1: int = 64
    hidden2: int = 16
    skip_enabled: bool = True
    alpha_init: float = 0.1
    warm_start_theta: bool = False

    def __post_init__(self):
        if min(self.num_features, self.hidden1, self.hidden2) < 1:
            raise ValueError("feature and hidden dimensions must be positive")


@dataclass
class HybridParams:
    pre_nn: tuple[DenseLayer, DenseLayer]
    theta: np.ndarray
    alpha: float
    post_nn: tuple[DenseLayer, DenseLayer]


@dataclass
class HybridGrads:
    pre_nn: tuple          # ((dW1, db1), (dW2, db2))
    theta: np.ndarray
    alpha: float | None    # None when the skip connection is disabled
    post_nn: tuple


@dataclass
class ForwardCache:
    z_classical: np.ndarray
    z_quantum: np.ndarray
    z_res: np.ndarray
    logit: float
    pre_caches: tuple
    post_caches: tuple


def init_hybrid_params(
    config: HybridConfig, circuit: CircuitIR, rng: np.random.Generator
) -> HybridParams:
    """Fresh parameters for a given candidate circuit.

    Circuit angles start at zero unless warm_start_theta is set, in which
    case the source literals recorded on the trainable slots are used.
    """
    q = circuit.num_qubits
    pre = (
        init_dense(config.hidden1, config.num_features, Activation.RELU, rng),
        init_dense(q, config.hidden1, Activation.IDENTITY, rng),
    )
    post = (
        init_dense(config.hidden2, q, Activation.RELU, rng),
        init_dense(1, config.hidden2, Activation.IDENTITY, rng),
    )
    theta = np.zeros(circuit.trainable_param_count)
    if config.warm_start_theta:
        for op in circuit.ops:
            for p in op.params:
                if isinstance(p, Trainable):
                    theta[p.slot] = p.init
    return HybridParams(pre, theta, config.alpha_init, post)


def forward(params: HybridParams, circuit: CircuitIR, x: np.ndarray, config: HybridConfig):
    """Returns (logit, cache)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (config.num_features,):
        raise ShapeMismatchError(f"feature vector shape {x.shape} != ({config.num_features},)")
    h, c1 = dense_forward(params.pre_nn[0], x)
    z_classical, c2 = dense_forward(params.pre_nn[1], h)
    z_quantum = execute(circuit, params.theta, z_classical)
    if config.skip_enabled:
        z_res = z_quantum + params.alpha * z_classical
    else:
        z_res = z_quantum
    g, c3 = dense_forward(params.post_nn[0], z_res)
    out, c4 = dense_forward(params.post_nn[1], g)
    logit = float(out[0])
    cache = ForwardCache(z_classical, z_quantum, z_res, logit, (c1, c2), (c3, c4))
    return logit, cache


def backward(
    params: HybridParams,
    circuit: CircuitIR,
    cache: ForwardCache,
    label: int,
    config: HybridConfig,
):
    """BCE loss and gradients for every trainable parameter.

    Returns (loss, HybridGrads). The classical encoder receives gradient
    through both the quantum encoding path and, when enabled, the residual
    bypass.
    """
    loss, d_logit = bce_with_logits(cache.logit, label)
    dw4, db4, d_g = dense_backward(params.post_nn[1], cache.post_caches[1], np.array([d_logit]))
    dw3, db3, d_zres = dense_backward(params.post_nn[0], cache.post_caches[0], d_g)

    jac = param_shift_jacobian(circuit, params.theta, cache.z_classical)
    d_theta = jac.d_theta.T @ d_zres
    d_zclassical = jac.d_encoding.T @ d_zres
    if config.skip_enabled:
        d_alpha = float(d_zres @ cache.z_classical)
        d_zclassical = d_zclassical + params.alpha * d_zres
    else:
        d_alpha = None

    dw2, db2, d_h = dense_backward(params.pre_nn[1], cache.pre_caches[1], d_zclassical)
    dw1, db1, _ = dense_backward(params.pre_nn[0], cache.pre_caches[0], d_h)
    grads = HybridGrads(((dw1, db1), (dw2, db2)), d_theta, d_alpha, ((dw3, db3), (dw4, db4)))
    return loss, grads


def predict_proba(params: HybridParams, circuit: CircuitIR, x, config: HybridConfig) -> float:
    logit, _ = forward(params, circuit, x, config)
    return sigmoid(logit)


# Flat parameter layout, used by the optimizer and checkpoints:
# pre1.W row-major, pre1.b, pre2.W, pre2.b, theta, alpha, post1.W, post1.b,
# post2.W, post2.b. Alpha keeps its position even when the skip connection
# is ablated (its gradient is then zero and it never moves).


def param_vector_size(config: HybridConfig, q: int, p: int) -> int:
    f, h1, h2 = config.num_features, config.hidden1, config.hidden2
    return (h1 * f + h1) + (q * h1 + q) + p + 1 + (h2 * q + h2) + (1 * h2 + 1)


def flatten_params(params: HybridParams) -> np.ndarray:
    chunks = []
    for layer in (*params.pre_nn,):
        chunks.append(layer.weights.ravel())
        chunks.append(layer.biases)
    chunks.append(params.theta)
    chunks.append(np.array([params.alpha]))
    for layer in (*params.post_nn,):
        chunks.append(layer.weights.ravel())
        chunks.append(layer.biases)
    return np.concatenate(chunks)


def flatten_grads(grads: HybridGrads) -> np.ndarray:
    chunks = []
    for dw, db in grads.pre_nn:
        chunks.append(dw.ravel())
        chunks.append(db)
    chunks.append(grads.theta)
    chunks.append(np.array([0.0 if grads.alpha is None else grads.alpha]))
    for dw, db in grads.post_nn:
        chunks.append(dw.ravel())
        chunks.append(db)
    return np.concatenate(chunks)


def unflatten_params(flat: np.ndarray, config: HybridConfig, q: int, p: int) -> HybridParams:
    expected = param_vector_size(config, q, p)
    if flat.shape != (expected,):
        raise ShapeMismatchError(f"flat vector shape {flat.shape} != ({expected},)")
    f, h1, h2 = config.num_features, config.hidden1, config.hidden2
    pos = 0

    def take(count: int) -> np.ndarray:
        nonlocal pos
        chunk = flat[pos : pos + count].copy()
        pos += count
        return chunk

    pre = (
        DenseLayer(take(h1 * f).reshape(h1, f), take(h1), Activation.RELU),
        DenseLayer(take(q * h1).reshape(q, h1), take(q), Activation.IDENTITY),
    )
    theta = take(p)
    alpha = float(take(1)[0])
    post = (
        DenseLayer(take(h2 * q).reshape(h2, q), take(h2), Activation.RELU),
        DenseLayer(take(1 * h2).reshape(1, h2), take(1), Activation.IDENTITY),
    )
    return HybridParams(pre, theta, alpha, post)
