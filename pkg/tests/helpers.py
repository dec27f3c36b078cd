"""Independent oracles and random-circuit builders shared by the tests.

Everything here recomputes expected values from first principles (explicit
matrix algebra, brute-force enumeration) and must stay decoupled from the
package kernels it checks.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from qcscreen.qasm import CircuitIR, GateKind, GateOp, Literal, Trainable

SQ2 = 1.0 / math.sqrt(2.0)

UNITARY_KINDS = (
    GateKind.H,
    GateKind.X,
    GateKind.Y,
    GateKind.Z,
    GateKind.S,
    GateKind.SDG,
    GateKind.T,
    GateKind.TDG,
    GateKind.RX,
    GateKind.RY,
    GateKind.RZ,
    GateKind.U1,
    GateKind.U2,
    GateKind.U3,
    GateKind.CX,
    GateKind.CZ,
    GateKind.SWAP,
    GateKind.CCX,
)

PARAMETRIC = (GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U1, GateKind.U2, GateKind.U3)


def oracle_matrix_1q(kind: GateKind, angles) -> np.ndarray:
    """Separate transcription of the standard one-qubit gate matrices."""
    if kind is GateKind.H:
        return np.array([[SQ2, SQ2], [SQ2, -SQ2]], dtype=complex)
    if kind is GateKind.X:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if kind is GateKind.Y:
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if kind is GateKind.Z:
        return np.diag([1.0, -1.0]).astype(complex)
    if kind is GateKind.S:
        return np.diag([1.0, 1j])
    if kind is GateKind.SDG:
        return np.diag([1.0, -1j])
    if kind is GateKind.T:
        return np.diag([1.0, cmath.exp(1j * math.pi / 4)])
    if kind is GateKind.TDG:
        return np.diag([1.0, cmath.exp(-1j * math.pi / 4)])
    if kind is GateKind.RX:
        (a,) = angles
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        return _expm_pauli(x, a)
    if kind is GateKind.RY:
        (a,) = angles
        y = np.array([[0, -1j], [1j, 0]], dtype=complex)
        return _expm_pauli(y, a)
    if kind is GateKind.RZ:
        (a,) = angles
        z = np.diag([1.0, -1.0]).astype(complex)
        return _expm_pauli(z, a)
    if kind is GateKind.U1:
        (lam,) = angles
        return np.diag([1.0, cmath.exp(1j * lam)])
    if kind is GateKind.U2:
        phi, lam = angles
        return oracle_matrix_1q(GateKind.U3, (math.pi / 2, phi, lam))
    if kind is GateKind.U3:
        a, phi, lam = angles
        return np.array(
            [
                [math.cos(a / 2), -cmath.exp(1j * lam) * math.sin(a / 2)],
                [
                    cmath.exp(1j * phi) * math.sin(a / 2),
                    cmath.exp(1j * (phi + lam)) * math.cos(a / 2),
                ],
            ]
        )
    raise ValueError(kind)


def _expm_pauli(pauli: np.ndarray, angle: float) -> np.ndarray:
    # exp(-i a P / 2) = cos(a/2) I - i sin(a/2) P, since P^2 = I
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * pauli


def _permutation_matrix(num_bits: int, rule):
    dim = 2**num_bits
    m = np.zeros((dim, dim), dtype=complex)
    for s in range(dim):
        s2, phase = rule(s)
        m[s2, s] = phase
    return m


def oracle_matrix_multi(kind: GateKind) -> np.ndarray:
    """Multi-qubit gates as permutation/phase matrices; sub-index bit i is
    the i-th listed qubit."""
    if kind is GateKind.CX:
        return _permutation_matrix(2, lambda s: (s ^ 2 if s & 1 else s, 1.0))
    if kind is GateKind.CZ:
        return _permutation_matrix(2, lambda s: (s, -1.0 if s == 3 else 1.0))
    if kind is GateKind.SWAP:

        def swap(s):
            b0, b1 = s & 1, (s >> 1) & 1
            return (b0 << 1) | b1, 1.0

        return _permutation_matrix(2, swap)
    if kind is GateKind.CCX:
        return _permutation_matrix(3, lambda s: (s ^ 4 if (s & 1) and (s & 2) else s, 1.0))
    raise ValueError(kind)


def embed(num_qubits: int, qubits, small: np.ndarray) -> np.ndarray:
    """Lift a gate matrix onto the full 2^n space by explicit bit bookkeeping.

    Little-endian: qubit k is bit k of the basis index; sub-index bit i of
    `small` corresponds to qubits[i].
    """
    dim = 2**num_qubits
    k = len(qubits)
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        sub_col = 0
        rest = col
        for i, q in enumerate(qubits):
            sub_col |= ((col >> q) & 1) << i
            rest &= ~(1 << q)
        for sub_row in range(2**k):
            amp = small[sub_row, sub_col]
            if amp == 0:
                continue
            row = rest
            for i, q in enumerate(qubits):
                if (sub_row >> i) & 1:
                    row |= 1 << q
            full[row, col] = amp
    return full


def resolve_angles(op: GateOp, theta) -> list[float]:
    return [p.angle if isinstance(p, Literal) else float(theta[p.slot]) for p in op.params]


def oracle_run(circuit: CircuitIR, theta=()) -> np.ndarray:
    """Full matrix-chain statevector, the brute-force reference for run()."""
    dim = 2**circuit.num_qubits
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    for op in circuit.ops:
        angles = resolve_angles(op, theta)
        if op.kind.qubit_arity == 1:
            small = oracle_matrix_1q(op.kind, angles)
        else:
            small = oracle_matrix_multi(op.kind)
        psi = embed(circuit.num_qubits, op.qubits, small) @ psi
    return psi


def oracle_expect_all_z(psi: np.ndarray, num_qubits: int) -> np.ndarray:
    out = np.zeros(num_qubits)
    for k in range(num_qubits):
        total = 0.0
        for b in range(len(psi)):
            sign = 1.0 if ((b >> k) & 1) == 0 else -1.0
            total += sign * abs(psi[b]) ** 2
        out[k] = total
    return out


def random_circuit(
    rng: np.random.Generator,
    num_qubits: int,
    num_gates: int,
    kinds=UNITARY_KINDS,
    trainable_prob: float = 0.0,
    source_id: str = "random",
) -> CircuitIR:
    """Random circuit over the supported unitary gates.

    With trainable_prob > 0, each parametric gate becomes trainable with
    that probability; slots are assigned consecutively in program order.
    """
    usable = [k for k in kinds if (k.qubit_arity or 1) <= num_qubits]
    ops = []
    slot = 0
    for _ in range(num_gates):
        kind = usable[int(rng.integers(len(usable)))]
        arity = kind.qubit_arity
        qubits = tuple(int(q) for q in rng.choice(num_qubits, size=arity, replace=False))
        if kind.param_arity and rng.uniform() < trainable_prob:
            params = []
            for _ in range(kind.param_arity):
                params.append(Trainable(slot, float(rng.uniform(-math.pi, math.pi))))
                slot += 1
            params = tuple(params)
        else:
            params = tuple(
                Literal(float(rng.uniform(-2 * math.pi, 2 * math.pi)))
                for _ in range(kind.param_arity)
            )
        ops.append(GateOp(kind, qubits, params))
    return CircuitIR(source_id, num_qubits, tuple(ops), trainable_param_count=slot)


def auc_bruteforce(scores, labels) -> float:
    """All positive/negative pairs, ties worth one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def reference_adam_quadratic(steps: int, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8, x0=3.0):
    """Scalar Adam on f(x) = x^2 / 2 (gradient x), transcribed directly."""
    x = x0
    m = 0.0
    v = 0.0
    path = [x]
    for t in range(1, steps + 1):
        g = x
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        x = x - lr * m_hat / (math.sqrt(v_hat) + eps)
        path.append(x)
    return path
