# eva/simulator.py
"""Exact statevector simulation of the package gate set, ancilla statistics and seeded
shot sampling, plus an independent dense-matrix oracle used by the tests.

Amplitude index convention is little-endian: bit q of the index is qubit q. Reshaping
the vector to [2] * n therefore puts qubit q on axis n - 1 - q.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from . import config
from .errors import InputShapeError, InvalidInputError, ResourceError
from .shared import make_rng

NORM_TOL = 1e-10


# ======================================================================================
# GATES
# ======================================================================================
class GateKind(str, Enum):
    H = "H"
    RX = "RX"
    RZ = "RZ"
    CNOT = "CNOT"
    CH = "CH"
    CRZ = "CRZ"
    CRX = "CRX"
    TOFFOLI = "TOFFOLI"   # marker emitted when a CNOT is controlled; simulated exactly

    @property
    def n_qubits(self) -> int:
        if self in (GateKind.H, GateKind.RX, GateKind.RZ):
            return 1
        if self is GateKind.TOFFOLI:
            return 3
        return 2

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RZ, GateKind.CRX, GateKind.CRZ)


_SQRT2_INV = 1 / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One gate. `qubits` lists controls first, target last."""

    kind: GateKind
    qubits: tuple[int, ...]
    theta: Optional[float] = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", qubits)

        if len(qubits) != kind.n_qubits:
            raise InvalidInputError(f"{kind.value} acts on {kind.n_qubits} qubit(s), got {qubits}")
        if len(set(qubits)) != len(qubits):
            raise InvalidInputError(f"{kind.value}: control and target must differ, got {qubits}")
        if any(q < 0 for q in qubits):
            raise InvalidInputError(f"{kind.value}: negative qubit index in {qubits}")
        if kind.parametric:
            if self.theta is None or not math.isfinite(float(self.theta)):
                raise InvalidInputError(f"{kind.value} needs a finite angle, got {self.theta!r}")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise InvalidInputError(f"{kind.value} takes no angle")

    @property
    def target(self) -> int:
        return self.qubits[-1]

    @property
    def controls(self) -> tuple[int, ...]:
        return self.qubits[:-1]

    def base_matrix(self) -> np.ndarray:
        """2x2 matrix applied on the target (when all controls are 1)."""
        k = self.kind
        if k is GateKind.H or k is GateKind.CH:
            return _H
        if k is GateKind.RX or k is GateKind.CRX:
            return rx_matrix(self.theta)
        if k is GateKind.RZ or k is GateKind.CRZ:
            return rz_matrix(self.theta)
        return _X   # CNOT, TOFFOLI

    # convenience constructors
    @staticmethod
    def h(q: int) -> "Gate":
        return Gate(GateKind.H, (q,))

    @staticmethod
    def rx(q: int, theta: float) -> "Gate":
        return Gate(GateKind.RX, (q,), theta)

    @staticmethod
    def rz(q: int, theta: float) -> "Gate":
        return Gate(GateKind.RZ, (q,), theta)

    @staticmethod
    def cnot(control: int, target: int) -> "Gate":
        return Gate(GateKind.CNOT, (control, target))

    @staticmethod
    def ch(control: int, target: int) -> "Gate":
        return Gate(GateKind.CH, (control, target))

    @staticmethod
    def crz(control: int, target: int, theta: float) -> "Gate":
        return Gate(GateKind.CRZ, (control, target), theta)

    @staticmethod
    def toffoli(c0: int, c1: int, target: int) -> "Gate":
        return Gate(GateKind.TOFFOLI, (c0, c1, target))

    def __str__(self) -> str:
        arg = f"({self.theta:.6g})" if self.theta is not None else ""
        return f"{self.kind.value}{arg}{list(self.qubits)}"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default=())

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 1:
            raise InvalidInputError(f"n_qubits must be positive, got {self.n_qubits}")
        gates = tuple(self.gates)
        for g in gates:
            if max(g.qubits) >= n:
                raise InvalidInputError(f"gate {g} out of range for a {n}-qubit circuit")
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, *others: "Circuit | Iterable[Gate]") -> "Circuit":
        """Concatenation; a Circuit argument may be narrower than self."""
        gates = list(self.gates)
        for o in others:
            gates.extend(o.gates if isinstance(o, Circuit) else o)
        return Circuit(self.n_qubits, tuple(gates))


# ======================================================================================
# STATES
# ======================================================================================
@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 1 << int(self.n_qubits):
            raise InputShapeError(f"{amps.shape[0]} amplitudes do not describe {self.n_qubits} qubits")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalized (|psi|^2 = {norm:.12g})")
        self.n_qubits = int(self.n_qubits)
        self.amplitudes = amps

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class MeasurementCounts:
    zeros: int
    ones: int

    def __post_init__(self):
        if self.zeros < 0 or self.ones < 0:
            raise InvalidInputError(f"negative counts: {self}")

    @property
    def total(self) -> int:
        return self.zeros + self.ones


# ======================================================================================
# SIMULATION
# ======================================================================================
def _axis(q: int, n: int) -> int:
    return n - 1 - q


def _apply_1q(psi: np.ndarray, matrix: np.ndarray, q: int, n: int) -> np.ndarray:
    # psi has shape [2] * n; returns a new array of the same shape
    ax = _axis(q, n)
    moved = np.moveaxis(psi, ax, 0)
    out = np.tensordot(matrix, moved, axes=([1], [0]))
    return np.moveaxis(out, 0, ax)


def _apply_gate(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    if not gate.controls:
        return _apply_1q(psi, gate.base_matrix(), gate.target, n)

    # act only on the sub-block where every control bit is 1
    idx = [slice(None)] * n
    for c in gate.controls:
        idx[_axis(c, n)] = 1
    idx = tuple(idx)
    sub = psi[idx]
    # the target axis position inside `sub` shifts down by the number of removed axes before it
    t_ax = _axis(gate.target, n)
    t_sub = t_ax - sum(1 for c in gate.controls if _axis(c, n) < t_ax)
    moved = np.moveaxis(sub, t_sub, 0)
    new = np.moveaxis(np.tensordot(gate.base_matrix(), moved, axes=([1], [0])), 0, t_sub)
    out = psi.copy()
    out[idx] = new
    return out


def run(circuit: Circuit, initial: Optional[StateVector] = None) -> StateVector:
    """Apply every gate of `circuit` in order. `initial` defaults to |0...0>."""
    n = circuit.n_qubits
    if initial is None:
        initial = StateVector.zero(n)
    if initial.n_qubits != n:
        raise InputShapeError(f"circuit has {n} qubits, state has {initial.n_qubits}")

    psi = initial.amplitudes.reshape([2] * n).copy()
    for g in circuit.gates:
        psi = _apply_gate(psi, g, n)
    return StateVector(n, psi.reshape(-1))


def ancilla_probabilities(state: StateVector, qubit: int) -> tuple[float, float]:
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise InvalidInputError(f"qubit {qubit} out of range for {n} qubits")
    probs = np.abs(state.amplitudes.reshape([2] * n)) ** 2
    other = tuple(a for a in range(n) if a != _axis(qubit, n))
    marginal = probs.sum(axis=other) if other else probs
    p0 = float(min(max(marginal[0] / marginal.sum(), 0.0), 1.0))
    return p0, 1.0 - p0


def sample_qubit(state: StateVector, qubit: int, shots: int, seed: int) -> MeasurementCounts:
    """`shots` independent Bernoulli(p1) draws from a Philox stream keyed by `seed`."""
    if shots < 1:
        raise InvalidInputError(f"shots must be >= 1, got {shots}")
    _, p1 = ancilla_probabilities(state, qubit)
    ones = int(make_rng(seed).binomial(int(shots), p1))
    return MeasurementCounts(int(shots) - ones, ones)


def sample_bitstrings(state: StateVector, shots: int, seed: int) -> np.ndarray:
    """Counts per basis index (length 2^n) for `shots` full-register measurements."""
    if shots < 1:
        raise InvalidInputError(f"shots must be >= 1, got {shots}")
    return make_rng(seed).multinomial(int(shots), state.probabilities())


def p0_minus_p1(counts: MeasurementCounts) -> float:
    if counts.total <= 0:
        raise InvalidInputError("p0_minus_p1 needs at least one shot")
    return (counts.zeros - counts.ones) / counts.total


# ======================================================================================
# DENSE ORACLE (tests only)
# ======================================================================================
_P0 = np.array([[1, 0], [0, 0]], dtype=complex)
_P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def _embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for q in reversed(range(n)):
        out = np.kron(out, ops.get(q, np.eye(2, dtype=complex)))
    return out


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    base = gate.base_matrix()
    if not gate.controls:
        return _embed({gate.target: base}, n)
    on = {c: _P1 for c in gate.controls}
    all_on = _embed(on, n)
    return np.eye(1 << n, dtype=complex) - all_on + _embed({**on, gate.target: base}, n)


def dense_oracle_unitary(circuit: Circuit, max_qubits: Optional[int] = None) -> np.ndarray:
    limit = config.ORACLE_MAX_QUBITS if max_qubits is None else max_qubits
    n = circuit.n_qubits
    if n > limit:
        raise ResourceError(f"dense oracle limited to {limit} qubits, circuit has {n}")
    u = np.eye(1 << n, dtype=complex)
    for g in circuit.gates:
        u = gate_unitary(g, n) @ u
    return u


def random_state(n_qubits: int, seed: int) -> StateVector:
    rng = make_rng(seed)
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


def random_circuit(n_qubits: int, n_gates: int, seed: int, kinds: Sequence[GateKind] = tuple(GateKind)) -> Circuit:
    rng = make_rng(seed)
    gates = []
    usable = [k for k in kinds if k.n_qubits <= n_qubits]
    for _ in range(n_gates):
        kind = usable[int(rng.integers(len(usable)))]
        qubits = tuple(int(q) for q in rng.choice(n_qubits, size=kind.n_qubits, replace=False))
        theta = float(rng.uniform(-2 * math.pi, 2 * math.pi)) if kind.parametric else None
        gates.append(Gate(kind, qubits, theta))
    return Circuit(n_qubits, tuple(gates))
