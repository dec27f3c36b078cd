"""OpenQASM 2.0 frontend.

Parses a fixed subset of OpenQASM 2.0 into an immutable circuit IR with
explicit trainable-parameter slots. Multiple qregs are flattened into one
zero-based index space in declaration order; cregs are parsed and ignored.
Custom `gate` definitions are inlined when their bodies expand purely into
supported gates; anything else is rejected at parse time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import QcScreenError


class QasmError(QcScreenError):
    """Base class for parse-time failures."""


class QasmSyntaxError(QasmError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsupportedGateError(QasmError):
    def __init__(self, name: str, line: int = 0):
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}unsupported gate '{name}'")
        self.gate_name = name
        self.line = line


class QubitOutOfRangeError(QasmError):
    def __init__(self, message: str, line: int = 0):
        where = f"line {line}: " if line else ""
        super().__init__(where + message)
        self.line = line


class GateKind(Enum):
    """Supported gate vocabulary; value is the canonical QASM spelling."""

    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    U1 = "u1"
    U2 = "u2"
    U3 = "u3"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    CCX = "ccx"
    BARRIER = "barrier"
    MEASURE = "measure"
    RESET = "reset"

    @property
    def qubit_arity(self) -> int | None:
        """Number of qubit operands; None for variadic (barrier)."""
        if self is GateKind.BARRIER:
            return None
        if self in (GateKind.CX, GateKind.CZ, GateKind.SWAP):
            return 2
        if self is GateKind.CCX:
            return 3
        return 1

    @property
    def param_arity(self) -> int:
        """Number of angle parameters the gate takes."""
        return _PARAM_ARITY.get(self, 0)


_PARAM_ARITY = {
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.U1: 1,
    GateKind.U2: 2,
    GateKind.U3: 3,
}

PARAMETRIC_KINDS = frozenset(_PARAM_ARITY)
NON_UNITARY_KINDS = frozenset({GateKind.BARRIER, GateKind.MEASURE, GateKind.RESET})
DEFAULT_TRAINABLE_GATES = frozenset({GateKind.RY, GateKind.RZ, GateKind.U2})

# Aliases accepted on input; canonical spellings come from GateKind values.
_GATE_NAMES = {kind.value: kind for kind in GateKind}
_GATE_NAMES["U"] = GateKind.U3   # core-language single-qubit primitive
_GATE_NAMES["CX"] = GateKind.CX  # core-language two-qubit primitive


@dataclass(frozen=True)
class Literal:
    """A fixed angle, in radians."""

    angle: float


@dataclass(frozen=True)
class Trainable:
    """An angle owned by the optimizer; `init` keeps the source literal for warm starts."""

    slot: int
    init: float = 0.0


ParamValue = Literal | Trainable


@dataclass(frozen=True)
class GateOp:
    kind: GateKind
    qubits: tuple[int, ...]
    params: tuple[ParamValue, ...] = ()


@dataclass(frozen=True)
class CircuitIR:
    source_id: str
    num_qubits: int
    ops: tuple[GateOp, ...]
    trainable_param_count: int = 0


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<number>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<sym>[-+*/(){}\[\],;])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m is None:
                raise QasmSyntaxError(f"unexpected character {line[pos]!r}", lineno)
            pos = m.end()
            if m.lastgroup in ("ws", "comment"):
                continue
            tokens.append((m.group(), lineno))
    return tokens


# Expression AST nodes are tuples: ("num", v) ("pi",) ("var", name)
# ("neg", x) ("+", l, r) ("-", l, r) ("*", l, r) ("/", l, r)


def _eval_expr(node, env: dict[str, float], line: int) -> float:
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "pi":
        return math.pi
    if tag == "var":
        if node[1] not in env:
            raise QasmSyntaxError(f"unknown identifier '{node[1]}' in expression", line)
        return env[node[1]]
    if tag == "neg":
        return -_eval_expr(node[1], env, line)
    lhs = _eval_expr(node[1], env, line)
    rhs = _eval_expr(node[2], env, line)
    if tag == "+":
        return lhs + rhs
    if tag == "-":
        return lhs - rhs
    if tag == "*":
        return lhs * rhs
    if tag == "/":
        if rhs == 0.0:
            raise QasmSyntaxError("division by zero in expression", line)
        return lhs / rhs
    raise AssertionError(f"bad expression node {tag}")


@dataclass
class _GateDef:
    params: list[str]
    qargs: list[str]
    # Body entries: (name, [expr ASTs], [formal qarg names], line)
    body: list[tuple[str, list, list[str], int]]


class _Parser:
    def __init__(self, text: str, source_id: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.source_id = source_id
        self.qreg_offsets: dict[str, tuple[int, int]] = {}  # name -> (offset, size)
        self.num_qubits = 0
        self.cregs: dict[str, int] = {}
        self.gate_defs: dict[str, _GateDef] = {}
        self.ops: list[GateOp] = []

    # token helpers ------------------------------------------------------

    def _peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def _line(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return self.tokens[-1][1] if self.tokens else 1

    def _next(self) -> tuple[str, int]:
        if self.pos >= len(self.tokens):
            raise QasmSyntaxError("unexpected end of input", self._line())
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, want: str) -> int:
        tok, line = self._next()
        if tok != want:
            raise QasmSyntaxError(f"expected '{want}', found '{tok}'", line)
        return line

    def _accept(self, want: str) -> bool:
        if self._peek() == want:
            self.pos += 1
            return True
        return False

    # expressions --------------------------------------------------------

    def _parse_expr(self):
        node = self._parse_term()
        while self._peek() in ("+", "-"):
            op, _ = self._next()
            node = (op, node, self._parse_term())
        return node

    def _parse_term(self):
        node = self._parse_unary()
        while self._peek() in ("*", "/"):
            op, _ = self._next()
            node = (op, node, self._parse_unary())
        return node

    def _parse_unary(self):
        if self._accept("-"):
            return ("neg", self._parse_unary())
        if self._accept("+"):
            return self._parse_unary()
        return self._parse_factor()

    def _parse_factor(self):
        tok, line = self._next()
        if tok == "(":
            node = self._parse_expr()
            self._expect(")")
            return node
        if tok == "pi":
            return ("pi",)
        if re.fullmatch(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?", tok):
            return ("num", float(tok))
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            if self._peek() == "(":
                raise QasmSyntaxError(f"function calls are not supported ('{tok}')", line)
            return ("var", tok)
        raise QasmSyntaxError(f"expected an angle expression, found '{tok}'", line)

    # operand parsing ----------------------------------------------------

    def _parse_qubit_operand(self) -> tuple[str, int | None, int]:
        """Returns (register name, index or None for whole-register, line)."""
        name, line = self._next()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise QasmSyntaxError(f"expected a register name, found '{name}'", line)
        index = None
        if self._accept("["):
            tok, tline = self._next()
            if not tok.isdigit():
                raise QasmSyntaxError(f"expected a qubit index, found '{tok}'", tline)
            index = int(tok)
            self._expect("]")
        return name, index, line

    def _resolve_qubits(self, name: str, index: int | None, line: int) -> list[int]:
        if name not in self.qreg_offsets:
            raise QasmSyntaxError(f"unknown quantum register '{name}'", line)
        offset, size = self.qreg_offsets[name]
        if index is None:
            return list(range(offset, offset + size))
        if index >= size:
            raise QubitOutOfRangeError(
                f"index {index} out of range for qreg '{name}' of size {size}", line
            )
        return [offset + index]

    # statements ---------------------------------------------------------

    def parse(self) -> CircuitIR:
        while self._peek() is not None:
            self._parse_statement()
        if self.num_qubits == 0:
            raise QasmSyntaxError("no qreg declared", self._line())
        return CircuitIR(
            source_id=self.source_id,
            num_qubits=self.num_qubits,
            ops=tuple(self.ops),
            trainable_param_count=0,
        )

    def _parse_statement(self) -> None:
        tok = self._peek()
        if tok == "OPENQASM":
            self._next()
            version, line = self._next()
            if version != "2.0":
                raise QasmSyntaxError(f"unsupported OPENQASM version '{version}'", line)
            self._expect(";")
        elif tok == "include":
            self._next()
            self._next()  # the include target string; qelib1 gates are built in
            self._expect(";")
        elif tok == "qreg":
            self._parse_reg_decl(is_qreg=True)
        elif tok == "creg":
            self._parse_reg_decl(is_qreg=False)
        elif tok == "gate":
            self._parse_gate_def()
        elif tok == "opaque":
            raise QasmSyntaxError("opaque declarations are not supported", self._line())
        elif tok == "if":
            raise QasmSyntaxError("classical control flow is not supported", self._line())
        elif tok == "barrier":
            self._parse_barrier()
        elif tok == "measure":
            self._parse_measure()
        elif tok == "reset":
            self._parse_reset()
        else:
            self._parse_gate_call()

    def _parse_reg_decl(self, is_qreg: bool) -> None:
        self._next()
        name, line = self._next()
        self._expect("[")
        size_tok, sline = self._next()
        if not size_tok.isdigit() or int(size_tok) < 1:
            raise QasmSyntaxError(f"register size must be a positive integer, found '{size_tok}'", sline)
        size = int(size_tok)
        self._expect("]")
        self._expect(";")
        if is_qreg:
            if name in self.qreg_offsets:
                raise QasmSyntaxError(f"duplicate qreg '{name}'", line)
            self.qreg_offsets[name] = (self.num_qubits, size)
            self.num_qubits += size
        else:
            self.cregs[name] = size

    def _parse_gate_def(self) -> None:
        self._next()
        name, line = self._next()
        if name in _GATE_NAMES or name in self.gate_defs:
            raise QasmSyntaxError(f"redefinition of gate '{name}'", line)
        params: list[str] = []
        if self._accept("("):
            if self._peek() != ")":
                while True:
                    pname, _ = self._next()
                    params.append(pname)
                    if not self._accept(","):
                        break
            self._expect(")")
        qargs: list[str] = []
        while True:
            qname, _ = self._next()
            qargs.append(qname)
            if not self._accept(","):
                break
        self._expect("{")
        body: list[tuple[str, list, list[str], int]] = []
        while not self._accept("}"):
            if self._peek() is None:
                raise QasmSyntaxError(f"unterminated body of gate '{name}'", line)
            if self._accept("barrier"):
                # barriers inside definitions have no effect on the expansion
                while not self._accept(";"):
                    self._next()
                continue
            callee, cline = self._next()
            exprs: list = []
            if self._accept("("):
                if self._peek() != ")":
                    while True:
                        exprs.append(self._parse_expr())
                        if not self._accept(","):
                            break
                self._expect(")")
            formals: list[str] = []
            while True:
                fname, fline = self._next()
                if fname not in qargs:
                    raise QasmSyntaxError(
                        f"'{fname}' is not a qubit argument of gate '{name}'", fline
                    )
                formals.append(fname)
                if not self._accept(","):
                    break
            self._expect(";")
            body.append((callee, exprs, formals, cline))
        self.gate_defs[name] = _GateDef(params, qargs, body)

    def _parse_barrier(self) -> None:
        self._next()
        qubits: list[int] = []
        if self._peek() != ";":
            while True:
                name, index, line = self._parse_qubit_operand()
                qubits.extend(self._resolve_qubits(name, index, line))
                if not self._accept(","):
                    break
        self._expect(";")
        self.ops.append(GateOp(GateKind.BARRIER, tuple(qubits)))

    def _parse_measure(self) -> None:
        self._next()
        name, index, line = self._parse_qubit_operand()
        qubits = self._resolve_qubits(name, index, line)
        self._expect("->")
        cname, _cidx, cline = self._parse_qubit_operand()
        if cname not in self.cregs:
            raise QasmSyntaxError(f"unknown classical register '{cname}'", cline)
        self._expect(";")
        for q in qubits:
            self.ops.append(GateOp(GateKind.MEASURE, (q,)))

    def _parse_reset(self) -> None:
        self._next()
        name, index, line = self._parse_qubit_operand()
        qubits = self._resolve_qubits(name, index, line)
        self._expect(";")
        for q in qubits:
            self.ops.append(GateOp(GateKind.RESET, (q,)))

    def _parse_gate_call(self) -> None:
        name, line = self._next()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise QasmSyntaxError(f"expected a statement, found '{name}'", line)
        exprs: list = []
        if self._accept("("):
            if self._peek() != ")":
                while True:
                    exprs.append(self._parse_expr())
                    if not self._accept(","):
                        break
            self._expect(")")
        operands: list[tuple[str, int | None, int]] = []
        while True:
            operands.append(self._parse_qubit_operand())
            if not self._accept(","):
                break
        self._expect(";")

        angles = [_eval_expr(e, {}, line) for e in exprs]
        kind = _GATE_NAMES.get(name)
        arity = kind.qubit_arity if kind is not None else None
        broadcastable = kind is not None and arity == 1 and all(
            idx is None for _, idx, _ in operands
        )
        if broadcastable and len(operands) == 1:
            rname, _, rline = operands[0]
            for q in self._resolve_qubits(rname, None, rline):
                self._emit_call(name, angles, [q], line)
            return
        qubits: list[int] = []
        for rname, idx, rline in operands:
            if idx is None:
                raise QasmSyntaxError(
                    "whole-register operands are only supported for single-qubit gates", rline
                )
            qubits.extend(self._resolve_qubits(rname, idx, rline))
        self._emit_call(name, angles, qubits, line)

    # expansion ----------------------------------------------------------

    def _emit_call(
        self, name: str, angles: list[float], qubits: list[int], line: int, depth: int = 0
    ) -> None:
        if depth > 64:
            raise QasmSyntaxError(f"gate '{name}' expands too deeply", line)
        kind = _GATE_NAMES.get(name)
        if kind is not None:
            if kind in NON_UNITARY_KINDS:
                raise QasmSyntaxError(f"'{name}' is not valid as a gate call", line)
            if len(angles) != kind.param_arity:
                raise QasmSyntaxError(
                    f"gate '{name}' takes {kind.param_arity} parameter(s), got {len(angles)}", line
                )
            if len(qubits) != kind.qubit_arity:
                raise QasmSyntaxError(
                    f"gate '{name}' takes {kind.qubit_arity} qubit(s), got {len(qubits)}", line
                )
            if len(set(qubits)) != len(qubits):
                raise QasmSyntaxError(f"duplicate qubit operands for gate '{name}'", line)
            params = tuple(Literal(a) for a in angles)
            self.ops.append(GateOp(kind, tuple(qubits), params))
            return
        if name in self.gate_defs:
            gdef = self.gate_defs[name]
            if len(angles) != len(gdef.params):
                raise QasmSyntaxError(
                    f"gate '{name}' takes {len(gdef.params)} parameter(s), got {len(angles)}", line
                )
            if len(qubits) != len(gdef.qargs):
                raise QasmSyntaxError(
                    f"gate '{name}' takes {len(gdef.qargs)} qubit(s), got {len(qubits)}", line
                )
            env = dict(zip(gdef.params, angles))
            qmap = dict(zip(gdef.qargs, qubits))
            for callee, exprs, formals, cline in gdef.body:
                sub_angles = [_eval_expr(e, env, cline) for e in exprs]
                sub_qubits = [qmap[f] for f in formals]
                self._emit_call(callee, sub_angles, sub_qubits, cline, depth + 1)
            return
        raise UnsupportedGateError(name, line)


def parse_qasm(text: str, source_id: str = "<memory>") -> CircuitIR:
    """Parse OpenQASM 2.0 source into a CircuitIR.

    All angle parameters come back as Literal values; BARRIER/MEASURE/RESET
    are retained (use strip_nonunitary to drop them).

    Raises QasmSyntaxError, UnsupportedGateError or QubitOutOfRangeError.
    """
    return _Parser(text, source_id).parse()


def mark_trainable(
    circuit: CircuitIR, trainable_set: frozenset[GateKind] = DEFAULT_TRAINABLE_GATES
) -> CircuitIR:
    """Turn every parameter of gates in `trainable_set` into a Trainable slot.

    Slots are numbered consecutively from 0 in program order; the source
    literal is kept on the slot for optional warm starts. Parametric gates
    outside the set keep their Literal values (frozen constants).
    """
    bad = trainable_set - PARAMETRIC_KINDS
    if bad:
        names = ", ".join(sorted(k.value for k in bad))
        raise ValueError(f"non-parametric gate kinds in trainable set: {names}")
    slot = 0
    new_ops: list[GateOp] = []
    for op in circuit.ops:
        if op.kind in trainable_set:
            params = []
            for p in op.params:
                init = p.angle if isinstance(p, Literal) else p.init
                params.append(Trainable(slot, init))
                slot += 1
            new_ops.append(replace(op, params=tuple(params)))
        else:
            new_ops.append(op)
    return replace(circuit, ops=tuple(new_ops), trainable_param_count=slot)


def strip_nonunitary(circuit: CircuitIR) -> CircuitIR:
    """Remove BARRIER/MEASURE/RESET ops, preserving the order of the rest."""
    kept = tuple(op for op in circuit.ops if op.kind not in NON_UNITARY_KINDS)
    return replace(circuit, ops=kept)


def to_qasm(circuit: CircuitIR) -> str:
    """Serialize a CircuitIR to canonical OpenQASM 2.0 text.

    Trainable parameters are emitted as their warm-start literals, so the
    round trip parse(to_qasm(c)) reproduces the unmarked structure of c.
    """
    lines = ['OPENQASM 2.0;', 'include "qelib1.inc";', f"qreg q[{circuit.num_qubits}];"]
    if any(op.kind is GateKind.MEASURE for op in circuit.ops):
        lines.append(f"creg c[{circuit.num_qubits}];")
    for op in circuit.ops:
        qubits = ",".join(f"q[{q}]" for q in op.qubits)
        if op.kind is GateKind.MEASURE:
            lines.append(f"measure q[{op.qubits[0]}] -> c[{op.qubits[0]}];")
        elif op.params:
            angles = ",".join(
                repr(p.angle if isinstance(p, Literal) else p.init) for p in op.params
            )
            lines.append(f"{op.kind.value}({angles}) {qubits};")
        else:
            lines.append(f"{op.kind.value} {qubits};")
    return "\n".join(lines) + "\n"
