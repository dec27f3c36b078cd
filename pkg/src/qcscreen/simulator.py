"""Dense statevector simulation with Pauli-Z expectation readout.

Convention: little-endian qubit ordering, i.e. qubit 0 is the least
significant bit of the basis-state index. Global phase is not tracked.
All arithmetic is complex128.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import QcScreenError
from .qasm import CircuitIR, GateKind, GateOp, Literal, NON_UNITARY_KINDS

MAX_QUBITS = 24

# Number of run() calls since import; tests use this to audit gradient cost.
run_count = 0


class QubitCountOutOfRangeError(QcScreenError):
    pass


class SlotOutOfRangeError(QcScreenError):
    pass


@dataclass
class StateVector:
    """Owned mutable amplitude buffer of length 2**num_qubits."""

    num_qubits: int
    amplitudes: np.ndarray


def init_zero_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise QubitCountOutOfRangeError(f"qubit count {n} outside [1, {MAX_QUBITS}]")
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def _resolve_angles(op: GateOp, theta) -> list[float]:
    angles = []
    for p in op.params:
        if isinstance(p, Literal):
            angles.append(p.angle)
        else:
            if p.slot >= len(theta):
                raise SlotOutOfRangeError(
                    f"parameter slot {p.slot} outside theta of length {len(theta)}"
                )
            angles.append(float(theta[p.slot]))
    return angles


_SQRT_HALF = 1.0 / math.sqrt(2.0)

_FIXED_1Q = {
    GateKind.H: np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, cmath.exp(0.25j * math.pi)]], dtype=complex),
    GateKind.TDG: np.array([[1, 0], [0, cmath.exp(-0.25j * math.pi)]], dtype=complex),
}


def gate_matrix(kind: GateKind, angles: list[float]) -> np.ndarray:
    """2x2 unitary for a single-qubit gate.

    Rotations use the half-angle convention R_P(a) = exp(-i a P / 2);
    u3(a, phi, lam) is diag-phase form [[cos, -e^{i lam} sin],
    [e^{i phi} sin, e^{i(phi+lam)} cos]] with half angles, and
    u2(phi, lam) = u3(pi/2, phi, lam), u1(lam) = diag(1, e^{i lam}).
    """
    if kind in _FIXED_1Q:
        return _FIXED_1Q[kind]
    if kind is GateKind.RX:
        (a,) = angles
        c, s = math.cos(a / 2), math.sin(a / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        (a,) = angles
        c, s = math.cos(a / 2), math.sin(a / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        (a,) = angles
        return np.array([[cmath.exp(-0.5j * a), 0], [0, cmath.exp(0.5j * a)]], dtype=complex)
    if kind is GateKind.U1:
        (lam,) = angles
        return np.array([[1, 0], [0, cmath.exp(1j * lam)]], dtype=complex)
    if kind is GateKind.U2:
        phi, lam = angles
        return _SQRT_HALF * np.array(
            [[1, -cmath.exp(1j * lam)], [cmath.exp(1j * phi), cmath.exp(1j * (phi + lam))]],
            dtype=complex,
        )
    if kind is GateKind.U3:
        a, phi, lam = angles
        c, s = math.cos(a / 2), math.sin(a / 2)
        return np.array(
            [[c, -cmath.exp(1j * lam) * s], [cmath.exp(1j * phi) * s, cmath.exp(1j * (phi + lam)) * c]],
            dtype=complex,
        )
    raise ValueError(f"no single-qubit matrix for {kind}")


def _apply_single(amps: np.ndarray, n: int, qubit: int, m: np.ndarray) -> None:
    # View the buffer as (high bits, target bit, low bits); qubit k has stride 2**k.
    view = amps.reshape(2 ** (n - 1 - qubit), 2, 2**qubit)
    lo = view[:, 0, :].copy()
    view[:, 0, :] = m[0, 0] * lo + m[0, 1] * view[:, 1, :]
    view[:, 1, :] = m[1, 0] * lo + m[1, 1] * view[:, 1, :]


def _axes_view(amps: np.ndarray, n: int, qubits: tuple[int, ...]) -> np.ndarray:
    # Tensor of shape (2,)*n where axis j carries qubit n-1-j; move the
    # requested qubits to the leading axes in the given order.
    tensor = amps.reshape((2,) * n)
    src = [n - 1 - q for q in qubits]
    return np.moveaxis(tensor, src, range(len(qubits)))


def apply_gate(state: StateVector, op: GateOp, theta=()) -> StateVector:
    """Apply one gate in place and return the state."""
    n = state.num_qubits
    amps = state.amplitudes
    kind = op.kind
    if kind in NON_UNITARY_KINDS:
        raise ValueError(f"cannot simulate non-unitary op {kind.value}; strip it first")
    for q in op.qubits:
        if q >= n:
            raise ValueError(f"qubit {q} out of range for {n}-qubit state")
    angles = _resolve_angles(op, theta)
    if kind.qubit_arity == 1:
        _apply_single(amps, n, op.qubits[0], gate_matrix(kind, angles))
        return state
    if kind is GateKind.CX:
        view = _axes_view(amps, n, op.qubits)  # (control, target, ...)
        tmp = view[1, 0].copy()
        view[1, 0] = view[1, 1]
        view[1, 1] = tmp
        return state
    if kind is GateKind.CZ:
        view = _axes_view(amps, n, op.qubits)
        view[1, 1] *= -1.0
        return state
    if kind is GateKind.SWAP:
        view = _axes_view(amps, n, op.qubits)
        tmp = view[0, 1].copy()
        view[0, 1] = view[1, 0]
        view[1, 0] = tmp
        return state
    if kind is GateKind.CCX:
        view = _axes_view(amps, n, op.qubits)  # (control, control, target, ...)
        tmp = view[1, 1, 0].copy()
        view[1, 1, 0] = view[1, 1, 1]
        view[1, 1, 1] = tmp
        return state
    raise ValueError(f"unhandled gate kind {kind}")


def run(circuit: CircuitIR, theta=()) -> StateVector:
    """Simulate a stripped circuit from |0...0> under parameter values theta."""
    global run_count
    run_count += 1
    if len(theta) != circuit.trainable_param_count:
        raise ValueError(
            f"theta has length {len(theta)}, circuit declares "
            f"{circuit.trainable_param_count} trainable parameters"
        )
    state = init_zero_state(circuit.num_qubits)
    for op in circuit.ops:
        apply_gate(state, op, theta)
    return state


def expect_all_z(state: StateVector) -> np.ndarray:
    """<Z_k> for every qubit k, each in [-1, 1]."""
    n = state.num_qubits
    probs = state.amplitudes.real**2 + state.amplitudes.imag**2
    tensor = probs.reshape((2,) * n)
    out = np.empty(n)
    for k in range(n):
        p1 = np.moveaxis(tensor, n - 1 - k, 0)[1].sum()
        out[k] = 1.0 - 2.0 * p1
    return out


def expect_z(state: StateVector, qubit: int = 0) -> float:
    """<Z_qubit> on its own; readout used by execution validation."""
    n = state.num_qubits
    probs = state.amplitudes.real**2 + state.amplitudes.imag**2
    p1 = np.moveaxis(probs.reshape((2,) * n), n - 1 - qubit, 0)[1].sum()
    return float(1.0 - 2.0 * p1)
