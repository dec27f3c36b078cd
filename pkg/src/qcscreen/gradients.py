"""Exact gradients of all-qubit Z expectations via the two-term parameter shift.

The differentiated program is: an RX data-encoding layer (one angle per
encoded qubit), then the candidate circuit, then an open CX entangling
chain over the encoded qubits. Every angle enters through a half-angle
Pauli rotation (u1/u2/u3 angles reduce to Z/Y rotation positions up to
global phase), so d<Z>/da = (E(a + pi/2) - E(a - pi/2)) / 2 holds exactly
for each parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ShapeMismatchError
from .qasm import CircuitIR, GateKind, GateOp, Literal
from . import simulator

SHIFT = math.pi / 2.0
DEFAULT_FD_STEP = 1e-5


@dataclass
class QuantumJacobian:
    d_theta: np.ndarray     # (num observables, circuit parameter count)
    d_encoding: np.ndarray  # (num observables, encoding angle count)


def assemble_program(circuit: CircuitIR, encoding_angles) -> CircuitIR:
    """Wrap a candidate circuit with RX encoding and the CX chain.

    encoding_angles may be empty (bare circuit, no chain) or hold one angle
    per encoded qubit; encoded qubit j receives RX(encoding_angles[j]) and
    the chain runs CX(j -> j+1) over the encoded range.
    """
    q = len(encoding_angles)
    if q > circuit.num_qubits:
        raise ShapeMismatchError(
            f"{q} encoding angles for a {circuit.num_qubits}-qubit circuit"
        )
    ops: list[GateOp] = [
        GateOp(GateKind.RX, (j,), (Literal(float(encoding_angles[j])),)) for j in range(q)
    ]
    ops.extend(circuit.ops)
    ops.extend(GateOp(GateKind.CX, (j, j + 1)) for j in range(q - 1))
    return replace(circuit, ops=tuple(ops))


def execute(circuit: CircuitIR, theta, encoding_angles=()) -> np.ndarray:
    """All-qubit Z expectations of the assembled program."""
    program = assemble_program(circuit, encoding_angles)
    return simulator.expect_all_z(simulator.run(program, theta))


def param_shift_jacobian(circuit: CircuitIR, theta, encoding_angles=()) -> QuantumJacobian:
    """Jacobians of every <Z_k> w.r.t. circuit and encoding angles.

    Costs exactly 2 * (P + q) program executions, each yielding all n
    expectations at once.
    """
    theta = np.asarray(theta, dtype=float)
    enc = np.asarray(encoding_angles, dtype=float)
    if theta.shape != (circuit.trainable_param_count,):
        raise ShapeMismatchError(
            f"theta shape {theta.shape} != ({circuit.trainable_param_count},)"
        )
    n = circuit.num_qubits
    d_theta = np.zeros((n, theta.size))
    d_encoding = np.zeros((n, enc.size))
    for p in range(theta.size):
        shifted = theta.copy()
        shifted[p] = theta[p] + SHIFT
        plus = execute(circuit, shifted, enc)
        shifted[p] = theta[p] - SHIFT
        minus = execute(circuit, shifted, enc)
        d_theta[:, p] = (plus - minus) / 2.0
    for j in range(enc.size):
        shifted = enc.copy()
        shifted[j] = enc[j] + SHIFT
        plus = execute(circuit, theta, shifted)
        shifted[j] = enc[j] - SHIFT
        minus = execute(circuit, theta, shifted)
        d_encoding[:, j] = (plus - minus) / 2.0
    return QuantumJacobian(d_theta, d_encoding)


def finite_diff_jacobian(
    circuit: CircuitIR, theta, encoding_angles=(), h: float = DEFAULT_FD_STEP
) -> QuantumJacobian:
    """Central-difference oracle for param_shift_jacobian."""
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    theta = np.asarray(theta, dtype=float)
    enc = np.asarray(encoding_angles, dtype=float)
    n = circuit.num_qubits
    d_theta = np.zeros((n, theta.size))
    d_encoding = np.zeros((n, enc.size))
    for p in range(theta.size):
        shifted = theta.copy()
        shifted[p] = theta[p] + h
        plus = execute(circuit, shifted, enc)
        shifted[p] = theta[p] - h
        minus = execute(circuit, shifted, enc)
        d_theta[:, p] = (plus - minus) / (2.0 * h)
    for j in range(enc.size):
        shifted = enc.copy()
        shifted[j] = enc[j] + h
        plus = execute(circuit, theta, shifted)
        shifted[j] = enc[j] - h
        minus = execute(circuit, theta, shifted)
        d_encoding[:, j] = (plus - minus) / (2.0 * h)
    return QuantumJacobian(d_theta, d_encoding)
