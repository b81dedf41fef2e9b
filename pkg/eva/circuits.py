# eva/circuits.py
"""Circuit builders: the exact Ising exponential, the imaginary-part Hadamard test, the
Toffoli-free reduced circuit, ansatz handling and the gate-cost model."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import AnsatzParseError, ConstraintError, InputShapeError, InvalidInputError
from .hamiltonian import IsingHamiltonian
from .shared import make_rng
from .simulator import Circuit, Gate, GateKind

# CNOTs needed to build one Toffoli
TOFFOLI_CNOTS = 6

ANSATZ_KINDS = (GateKind.H, GateKind.RX, GateKind.RZ, GateKind.CNOT)
SINGLE_AXIS_KINDS = (GateKind.RX, GateKind.CNOT)

_PROMOTE = {
    GateKind.H: GateKind.CH,
    GateKind.RX: GateKind.CRX,
    GateKind.RZ: GateKind.CRZ,
}


# ======================================================================================
# TYPES
# ======================================================================================
@dataclass(frozen=True)
class Ansatz:
    """State preparation applied to |0...0>.

    Any uncontrolled kind (H, RX, RZ, CNOT) is accepted so the general Hadamard test can
    run on arbitrary states; `validate_single_axis` decides whether the reduced circuit
    may be used.
    """

    n_qubits: int
    gates: tuple[Gate, ...] = field(default=())

    def __post_init__(self):
        n = int(self.n_qubits)
        gates = tuple(self.gates)
        for g in gates:
            if g.kind not in ANSATZ_KINDS:
                raise InvalidInputError(f"ansatz gates must be one of {[k.value for k in ANSATZ_KINDS]}, got {g}")
        # Circuit re-checks the register bounds
        Circuit(n, gates)
        object.__setattr__(self, "n_qubits", n)
        object.__setattr__(self, "gates", gates)

    def circuit(self, n_qubits: int | None = None) -> Circuit:
        return Circuit(self.n_qubits if n_qubits is None else n_qubits, self.gates)


@dataclass(frozen=True)
class CostReport:
    circuit_count: int
    one_qubit_gates: int
    cnot_count: int
    toffoli_count: int
    expanded_cnot_count: int
    depth: int
    total_shots: int
    two_qubit_gates: int = 0    # CH / CRZ / CRX
    gate_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


# ======================================================================================
# EXPONENTIAL  e^{iHt}
# ======================================================================================
def _term_block(support: tuple[int, ...], angle: float) -> list[Gate]:
    # parity ladder onto the last qubit of the support, phase, unwind
    ladder = [Gate.cnot(a, b) for a, b in zip(support, support[1:])]
    return ladder + [Gate.rz(support[-1], angle)] + ladder[::-1]


def exponential_circuit(H: IsingHamiltonian, t: float) -> Circuit:
    """Exact e^{iHt}: one block per term, RZ(-2 t c) on the parity of the support.

    RZ(-2tc) = diag(e^{itc}, e^{-itc}) = e^{itcZ} with no global phase, and all Z terms
    commute, so the product of blocks equals e^{iHt} exactly.
    """
    if not math.isfinite(t):
        raise InvalidInputError(f"t must be finite, got {t}")
    gates: list[Gate] = []
    for term in H.terms:
        gates.extend(_term_block(term.support, -2.0 * t * term.coeff))
    return Circuit(H.n_qubits, tuple(gates))


def controlled_circuit(body: Circuit, ancilla: int) -> Circuit:
    """Every gate of `body` conditioned on `ancilla`. CNOTs become Toffoli markers."""
    used = {q for g in body.gates for q in g.qubits}
    if ancilla in used:
        raise InvalidInputError(f"ancilla {ancilla} is used by the controlled body")
    if ancilla < 0:
        raise InvalidInputError(f"negative ancilla index {ancilla}")

    out: list[Gate] = []
    for g in body.gates:
        if g.kind is GateKind.CNOT:
            out.append(Gate.toffoli(ancilla, g.qubits[0], g.target))
        elif g.kind in _PROMOTE:
            out.append(Gate(_PROMOTE[g.kind], (ancilla, g.target), g.theta))
        else:
            raise ConstraintError(f"cannot add a control to {g}")
    return Circuit(max(body.n_qubits, ancilla + 1), tuple(out))


# ======================================================================================
# TEST CIRCUITS
# ======================================================================================
def _check_k(k: float):
    if not (math.isfinite(k) and k >= 1):
        raise InvalidInputError(f"k must be a finite number >= 1, got {k}")


def _check_sizes(H: IsingHamiltonian, ansatz: Ansatz):
    if ansatz.n_qubits != H.n_qubits:
        raise InputShapeError(f"ansatz has {ansatz.n_qubits} qubits, Hamiltonian has {H.n_qubits}")


def hadamard_test_circuit(H: IsingHamiltonian, k: float, ansatz: Ansatz) -> Circuit:
    """Ancilla (index n) ends with P(0) - P(1) = Im <phi| e^{iH/k} |phi>."""
    _check_k(k)
    _check_sizes(H, ansatz)
    n = H.n_qubits
    anc = n
    return ansatz.circuit(n + 1).then(
        [Gate.h(anc), Gate.rz(anc, -math.pi / 2)],
        controlled_circuit(exponential_circuit(H, 1.0 / k), anc),
        [Gate.h(anc)],
    )


def reduced_eva_circuit(H: IsingHamiltonian, k: float, ansatz: Ansatz) -> Circuit:
    """Toffoli-free variant: controlled-H conjugation around an uncontrolled exponential.

    For small angles and a single-axis ansatz the ancilla gives P(0) - P(1) ~ <H>/k.
    """
    _check_k(k)
    _check_sizes(H, ansatz)
    if not validate_single_axis(ansatz):
        raise ConstraintError("reduced EVA needs a single-axis ansatz (RX and CNOT gates only)")
    n = H.n_qubits
    anc = n
    ch_layer = [Gate.ch(anc, q) for q in range(n)]
    return ansatz.circuit(n + 1).then(
        [Gate.h(anc), Gate.rz(anc, math.pi / 2)],
        ch_layer,
        exponential_circuit(H, 1.0 / k),
        ch_layer,
        [Gate.h(anc)],
    )


# ======================================================================================
# ANSATZ
# ======================================================================================
def validate_single_axis(ansatz: Ansatz) -> bool:
    return all(g.kind in SINGLE_AXIS_KINDS for g in ansatz.gates)


def prepares_basis_state(ansatz: Ansatz, atol: float = 1e-12) -> bool:
    """True when every RX angle is a multiple of pi, i.e. the state is one basis vector."""
    for g in ansatz.gates:
        if g.kind is GateKind.RX:
            r = math.remainder(g.theta, math.pi)
            if abs(r) > atol:
                return False
        elif g.kind is not GateKind.CNOT:
            return False
    return True


def basis_state_ansatz(bits: Sequence[int]) -> Ansatz:
    """|bits> (up to a global phase) via RX(pi) on every set bit."""
    return Ansatz(len(bits), tuple(Gate.rx(q, math.pi) for q, b in enumerate(bits) if int(b)))


def random_single_axis_ansatz(n_qubits: int, seed: int, layers: int = 2) -> Ansatz:
    """RX layer, CNOT ladder, ..., RX layer with angles uniform on [0, 2pi)."""
    rng = make_rng(seed)
    gates: list[Gate] = []
    for layer in range(layers):
        gates.extend(Gate.rx(q, float(a)) for q, a in enumerate(rng.uniform(0, 2 * math.pi, n_qubits)))
        if layer < layers - 1:
            gates.extend(Gate.cnot(q, q + 1) for q in range(n_qubits - 1))
    return Ansatz(n_qubits, tuple(gates))


def random_basis_ansatz(n_qubits: int, seed: int) -> Ansatz:
    rng = make_rng(seed)
    bits = [int(b) for b in rng.integers(0, 2, n_qubits)]
    gates = list(basis_state_ansatz(bits).gates)
    gates.extend(Gate.cnot(q, q + 1) for q in range(n_qubits - 1))
    return Ansatz(n_qubits, tuple(gates))


def serialize_ansatz(ansatz: Ansatz) -> str:
    rows = []
    for g in ansatz.gates:
        if g.kind is GateKind.CNOT:
            rows.append({"gate": "CNOT", "control": g.qubits[0], "target": g.target})
        elif g.theta is not None:
            rows.append({"gate": g.kind.value, "qubit": g.target, "theta": g.theta})
        else:
            rows.append({"gate": g.kind.value, "qubit": g.target})
    return json.dumps({"n": ansatz.n_qubits, "gates": rows})


def parse_ansatz(text: str | bytes) -> Ansatz:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise AnsatzParseError(f"malformed ansatz JSON: {e}") from e
    if not isinstance(doc, dict) or "n" not in doc or "gates" not in doc:
        raise AnsatzParseError('ansatz document needs keys "n" and "gates"')
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise AnsatzParseError(f'"n" must be a positive integer, got {n!r}')

    gates: list[Gate] = []
    for i, row in enumerate(doc["gates"] if isinstance(doc["gates"], list) else [None]):
        if not isinstance(row, dict) or "gate" not in row:
            raise AnsatzParseError(f'gate {i}: needs a "gate" key')
        name = str(row["gate"]).upper()
        try:
            if name == "CNOT":
                gates.append(Gate.cnot(row["control"], row["target"]))
            elif name in ("RX", "RZ"):
                gates.append(Gate(GateKind(name), (row["qubit"],), row["theta"]))
            elif name == "H":
                gates.append(Gate.h(row["qubit"]))
            else:
                raise AnsatzParseError(f"gate {i}: unsupported ansatz gate {row['gate']!r}")
        except KeyError as e:
            raise AnsatzParseError(f"gate {i}: missing field {e}") from e
        except (TypeError, ValueError) as e:
            if isinstance(e, AnsatzParseError):
                raise
            raise AnsatzParseError(f"gate {i}: {e}") from e
    try:
        return Ansatz(n, tuple(gates))
    except InvalidInputError as e:
        raise AnsatzParseError(str(e)) from e


def load_ansatz(path) -> Ansatz:
    p = Path(path)
    if not p.exists():
        raise AnsatzParseError(f"ansatz file not found: {p}")
    return parse_ansatz(p.read_text(encoding="utf-8"))


# ======================================================================================
# COST MODEL
# ======================================================================================
def circuit_depth(circuit: Circuit) -> int:
    """Greedy per-qubit layering: each gate lands one layer after the latest of its qubits."""
    level = np.zeros(circuit.n_qubits, dtype=int)
    for g in circuit.gates:
        layer = int(level[list(g.qubits)].max()) + 1
        level[list(g.qubits)] = layer
    return int(level.max()) if circuit.n_qubits else 0


def cost_report(circuit: Circuit, shots: int, circuit_count: int = 1) -> CostReport:
    counts = Counter(g.kind for g in circuit.gates)
    one_q = sum(counts[k] for k in (GateKind.H, GateKind.RX, GateKind.RZ))
    two_q = sum(counts[k] for k in (GateKind.CH, GateKind.CRZ, GateKind.CRX))
    cnots = counts[GateKind.CNOT]
    toffolis = counts[GateKind.TOFFOLI]
    return CostReport(
        circuit_count=int(circuit_count),
        one_qubit_gates=one_q,
        cnot_count=cnots,
        toffoli_count=toffolis,
        expanded_cnot_count=cnots + TOFFOLI_CNOTS * toffolis,
        depth=circuit_depth(circuit),
        total_shots=int(shots),
        two_qubit_gates=two_q,
        gate_counts={k.value: c for k, c in sorted(counts.items(), key=lambda kv: kv[0].value)},
    )


def combine_costs(reports: Sequence[CostReport], shots: int) -> CostReport:
    """Totals over several circuits (one per term or per group); depth is the deepest."""
    gate_counts: Counter = Counter()
    for r in reports:
        gate_counts.update(r.gate_counts)
    return CostReport(
        circuit_count=len(reports),
        one_qubit_gates=sum(r.one_qubit_gates for r in reports),
        cnot_count=sum(r.cnot_count for r in reports),
        toffoli_count=sum(r.toffoli_count for r in reports),
        expanded_cnot_count=sum(r.expanded_cnot_count for r in reports),
        depth=max((r.depth for r in reports), default=0),
        total_shots=int(shots),
        two_qubit_gates=sum(r.two_qubit_gates for r in reports),
        gate_counts=dict(sorted(gate_counts.items())),
    )
