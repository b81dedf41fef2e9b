# eva/estimators.py
"""Expectation-value estimators for diagonal Hamiltonians.

  exact        <phi|H|phi> from the simulated state
  eva          k * Im<phi|e^{iH/k}|phi> read from one Hadamard-test circuit
  reduced_eva  the Toffoli-free variant (single-axis ansatz only)
  vqe_naive    one measurement circuit per Pauli term
  vqe_grouped  one circuit per qubit-wise commuting group

Sampled estimators take `shots=None` for exact-probability mode, which reads the
measured probabilities analytically instead of drawing shots.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import config
from .circuits import (
    Ansatz,
    CostReport,
    combine_costs,
    cost_report,
    hadamard_test_circuit,
    prepares_basis_state,
    reduced_eva_circuit,
    validate_single_axis,
)
from .errors import ConstraintError, InputShapeError, InvalidInputError, ResourceError
from .hamiltonian import IsingHamiltonian, PauliZTerm, hamiltonian_norm, normalize
from .shared import derive_seed
from .simulator import (
    Circuit,
    Gate,
    StateVector,
    ancilla_probabilities,
    p0_minus_p1,
    run,
    sample_bitstrings,
    sample_qubit,
)

NORM_TOL = 1e-12
# basis-state ansatz keeps the nominal reduced bound while ||H||/k stays below this
NOMINAL_REDUCED_MAX_ANGLE = 0.6
SEED_MAX = (1 << 64) - 1


class Method(str, Enum):
    EXACT = "exact"
    EVA = "eva"
    REDUCED_EVA = "reduced_eva"
    VQE_NAIVE = "vqe_naive"
    VQE_GROUPED = "vqe_grouped"

    @classmethod
    def parse(cls, name: str) -> "Method":
        key = name.strip().lower().replace("-", "_")
        if key == "reduced":
            key = "reduced_eva"
        try:
            return cls(key)
        except ValueError:
            raise InvalidInputError(f"unknown method {name!r}; choose from {[m.value for m in cls]} or 'reduced'") from None

    @property
    def sampled(self) -> bool:
        return self is not Method.EXACT


@dataclass(frozen=True)
class EstimateReport:
    method: Method
    value: float
    k: float
    shots_used: int
    circuit_count: int
    cost: CostReport
    bound: Optional[float]
    seed: int
    exact_probabilities: bool = False
    scale: float = 1.0
    wall_time_ms: float = 0.0
    n_qubits: int = 0
    n_terms: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method"] = self.method.value
        out["cost"] = self.cost.to_dict()
        return out


# ======================================================================================
# HELPERS
# ======================================================================================
def _check_sizes(H: IsingHamiltonian, ansatz: Ansatz):
    if ansatz.n_qubits != H.n_qubits:
        raise InputShapeError(f"ansatz has {ansatz.n_qubits} qubits, Hamiltonian has {H.n_qubits}")


def _check_k(k: float):
    if not (math.isfinite(k) and k >= 1):
        raise InvalidInputError(f"k must be a finite number >= 1, got {k}")


def _check_seed(seed: int):
    if not 0 <= int(seed) <= SEED_MAX:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {seed}")


def _check_shots(shots: Optional[int]):
    if shots is not None and int(shots) < 1:
        raise InvalidInputError(f"shots must be >= 1 (or None for exact probabilities), got {shots}")


def _normalized_norm(H: IsingHamiltonian) -> float:
    norm = hamiltonian_norm(H).value
    if norm > 1.0 + NORM_TOL:
        raise InvalidInputError(f"bound needs a normalized Hamiltonian (||H|| <= 1), got ||H|| = {norm:.6g}")
    return norm


def prepare_state(ansatz: Ansatz) -> StateVector:
    if ansatz.n_qubits > config.EXACT_MAX_QUBITS:
        raise ResourceError(f"statevector limited to {config.EXACT_MAX_QUBITS} qubits, ansatz has {ansatz.n_qubits}")
    return run(ansatz.circuit())


def _ms_since(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# ======================================================================================
# EXACT VALUES
# ======================================================================================
def exact_expectation(H: IsingHamiltonian, ansatz: Ansatz) -> float:
    _check_sizes(H, ansatz)
    probs = prepare_state(ansatz).probabilities()
    return float(probs @ H.diagonal())


def imag_exponential_exact(H: IsingHamiltonian, ansatz: Ansatz, k: float) -> float:
    """Im<phi|e^{iH/k}|phi> = sum_x |<x|phi>|^2 sin(E_x / k)."""
    _check_sizes(H, ansatz)
    _check_k(k)
    probs = prepare_state(ansatz).probabilities()
    return float(probs @ np.sin(H.diagonal() / k))


# ======================================================================================
# BOUNDS AND SHOT POLICY
# ======================================================================================
def shots_for_k(base_shots: int, k: float) -> int:
    """Resolving <H>/k to the precision of <H> costs k^2 times the shots."""
    if base_shots < 1:
        raise InvalidInputError(f"base_shots must be >= 1, got {base_shots}")
    _check_k(k)
    return int(math.ceil(base_shots * k * k))


def eva_error_bound(H: IsingHamiltonian, k: float) -> float:
    """|Im<e^{iH/k}> - <H>/k| <= ||H||^3 / (6 k^3)."""
    _check_k(k)
    return _normalized_norm(H) ** 3 / (6.0 * k ** 3)


def reduced_error_bound(H: IsingHamiltonian, k: float) -> float:
    """|P(0) - P(1) - <H>/k| <= ||H||^2 / (2 k^2).

    Holds for ansatze preparing a computational basis state while ||H||/k <= 0.6;
    see `reduced_bound_for` for the bound that applies to any single-axis state.
    """
    _check_k(k)
    return _normalized_norm(H) ** 2 / (2.0 * k ** 2)


def reduced_error_bound_general(H: IsingHamiltonian, k: float) -> float:
    """2 ||H||^2 / k^2, valid for every RX/CNOT ansatz.

    An RX/CNOT state has flat magnitudes in the Hadamard basis, so every X-string has zero
    expectation and the first-order terms reduce to <H>/k. The second-order Taylor
    remainder is at most (2||H||/k)^2 / 2.
    """
    _check_k(k)
    return 2.0 * _normalized_norm(H) ** 2 / k ** 2


def reduced_bound_for(H: IsingHamiltonian, k: float, ansatz: Ansatz) -> float:
    _check_k(k)
    norm = _normalized_norm(H)
    if prepares_basis_state(ansatz) and norm / k <= NOMINAL_REDUCED_MAX_ANGLE:
        return reduced_error_bound(H, k)
    return reduced_error_bound_general(H, k)


# ======================================================================================
# EVA
# ======================================================================================
def _ancilla_estimate(circuit: Circuit, shots: Optional[int], seed: int) -> tuple[float, int, float]:
    """(P(0) - P(1), shots used, wall ms) for the ancilla, the last qubit of `circuit`."""
    anc = circuit.n_qubits - 1
    t0 = time.perf_counter()
    state = run(circuit)
    if shots is None:
        p0, p1 = ancilla_probabilities(state, anc)
        return p0 - p1, 0, _ms_since(t0)
    counts = sample_qubit(state, anc, shots, seed)
    return p0_minus_p1(counts), int(shots), _ms_since(t0)


def _resolve_shots(base_shots: Optional[int], k: float, scale_shots: bool) -> Optional[int]:
    # scale_shots=False keeps base_shots at every k (fixed-budget policy of sweep-k)
    if base_shots is None:
        return None
    return shots_for_k(base_shots, k) if scale_shots else int(base_shots)


def eva_estimate(
    H: IsingHamiltonian,
    ansatz: Ansatz,
    k: float = config.DEFAULT_K,
    base_shots: Optional[int] = config.BASE_SHOTS,
    seed: int = 0,
    scale_shots: bool = True,
) -> EstimateReport:
    _check_sizes(H, ansatz)
    _check_k(k)
    _check_seed(seed)
    _check_shots(base_shots)

    nh = normalize(H)
    circuit = hadamard_test_circuit(nh.hamiltonian, k, ansatz)
    shots = _resolve_shots(base_shots, k, scale_shots)
    diff, used, wall = _ancilla_estimate(circuit, shots, seed)

    return EstimateReport(
        method=Method.EVA,
        value=nh.scale * k * diff,
        k=float(k),
        shots_used=used,
        circuit_count=1,
        cost=cost_report(circuit, used),
        bound=nh.scale * k * eva_error_bound(nh.hamiltonian, k),
        seed=int(seed),
        exact_probabilities=shots is None,
        scale=nh.scale,
        wall_time_ms=wall,
        n_qubits=H.n_qubits,
        n_terms=len(H),
    )


def reduced_eva_estimate(
    H: IsingHamiltonian,
    ansatz: Ansatz,
    k: float = config.DEFAULT_K,
    base_shots: Optional[int] = config.BASE_SHOTS,
    seed: int = 0,
    scale_shots: bool = True,
) -> EstimateReport:
    _check_sizes(H, ansatz)
    _check_k(k)
    _check_seed(seed)
    _check_shots(base_shots)
    if not validate_single_axis(ansatz):
        raise ConstraintError("reduced EVA needs a single-axis ansatz (RX and CNOT gates only)")

    nh = normalize(H)
    circuit = reduced_eva_circuit(nh.hamiltonian, k, ansatz)
    shots = _resolve_shots(base_shots, k, scale_shots)
    diff, used, wall = _ancilla_estimate(circuit, shots, seed)

    return EstimateReport(
        method=Method.REDUCED_EVA,
        value=nh.scale * k * diff,
        k=float(k),
        shots_used=used,
        circuit_count=1,
        cost=cost_report(circuit, used),
        bound=nh.scale * k * reduced_bound_for(nh.hamiltonian, k, ansatz),
        seed=int(seed),
        exact_probabilities=shots is None,
        scale=nh.scale,
        wall_time_ms=wall,
        n_qubits=H.n_qubits,
        n_terms=len(H),
    )


# ======================================================================================
# VQE BASELINES
# ======================================================================================
PAULI_LETTERS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    """Per-qubit letters (index q is qubit q) with a real weight."""

    letters: tuple[str, ...]
    coeff: float = 1.0

    def __post_init__(self):
        letters = tuple(str(c).upper() for c in self.letters)
        if any(c not in PAULI_LETTERS for c in letters):
            raise InvalidInputError(f"Pauli letters must be in {PAULI_LETTERS}, got {letters}")
        if all(c == "I" for c in letters):
            raise InvalidInputError("a Pauli string needs at least one non-identity letter")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coeff", float(self.coeff))

    @classmethod
    def from_label(cls, label: str, coeff: float = 1.0) -> "PauliString":
        """'ZIX' -> Z on qubit 0, X on qubit 2."""
        return cls(tuple(label), coeff)

    @classmethod
    def from_z_term(cls, term: PauliZTerm, n_qubits: int) -> "PauliString":
        return cls(tuple("Z" if q in term.support else "I" for q in range(n_qubits)), term.coeff)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.letters) if c != "I")

    def label(self) -> str:
        return "".join(self.letters)


def qubit_wise_commute(a: PauliString, b: PauliString) -> bool:
    return all(x == y or x == "I" or y == "I" for x, y in zip(a.letters, b.letters))


def group_pauli_strings(strings: Sequence[PauliString]) -> list[list[PauliString]]:
    """Greedy first-fit into qubit-wise commuting groups, largest |coeff| first."""
    if not strings:
        raise InvalidInputError("group_pauli_strings needs at least one string")
    ordered = sorted(strings, key=lambda s: -abs(s.coeff))
    groups: list[list[PauliString]] = []
    for s in ordered:
        for g in groups:
            if all(qubit_wise_commute(s, other) for other in g):
                g.append(s)
                break
        else:
            groups.append([s])
    return groups


def measurement_basis_gates(group: Sequence[PauliString]) -> list[Gate]:
    """Rotations taking each qubit's shared letter to Z (X: H, Y: RX(pi/2))."""
    n = group[0].n_qubits
    gates: list[Gate] = []
    for q in range(n):
        letter = next((s.letters[q] for s in group if s.letters[q] != "I"), "I")
        if letter == "X":
            gates.append(Gate.h(q))
        elif letter == "Y":
            gates.append(Gate.rx(q, math.pi / 2))
    return gates


def _parity_signs(mask: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    return 1.0 - 2.0 * (np.bitwise_count(idx & np.uint64(mask)) & 1)


def _mask(support: Sequence[int]) -> int:
    m = 0
    for q in support:
        m |= 1 << q
    return m


def _measure_distribution(circuit: Circuit, shots: Optional[int], seed: int) -> tuple[np.ndarray, float]:
    """Empirical (or exact) outcome distribution over basis indices, plus wall ms."""
    t0 = time.perf_counter()
    state = run(circuit)
    if shots is None:
        dist = state.probabilities()
    else:
        dist = sample_bitstrings(state, shots, seed) / float(shots)
    return dist, _ms_since(t0)


def vqe_naive_estimate(
    H: IsingHamiltonian,
    ansatz: Ansatz,
    shots_per_circuit: Optional[int] = config.BASE_SHOTS,
    seed: int = 0,
) -> EstimateReport:
    """One ansatz + computational-basis measurement circuit per term."""
    _check_sizes(H, ansatz)
    _check_seed(seed)
    _check_shots(shots_per_circuit)
    if not H.terms:
        raise InvalidInputError("cannot estimate an empty Hamiltonian")
    if H.n_qubits > config.EXACT_MAX_QUBITS:
        raise ResourceError(f"statevector limited to {config.EXACT_MAX_QUBITS} qubits")

    n = H.n_qubits
    circuit = ansatz.circuit()
    value = 0.0
    wall = 0.0
    costs: list[CostReport] = []
    for i, term in enumerate(H.terms):
        dist, ms = _measure_distribution(circuit, shots_per_circuit, derive_seed(seed, i))
        wall += ms
        value += term.coeff * float(dist @ _parity_signs(term.mask, n))
        costs.append(cost_report(circuit, shots_per_circuit or 0))

    used = 0 if shots_per_circuit is None else int(shots_per_circuit) * len(H)
    return EstimateReport(
        method=Method.VQE_NAIVE,
        value=value,
        k=1.0,
        shots_used=used,
        circuit_count=len(H),
        cost=combine_costs(costs, used),
        bound=None,
        seed=int(seed),
        exact_probabilities=shots_per_circuit is None,
        wall_time_ms=wall,
        n_qubits=n,
        n_terms=len(H),
    )


def estimate_pauli_strings(
    strings: Sequence[PauliString],
    ansatz: Ansatz,
    shots_per_circuit: Optional[int],
    seed: int,
) -> tuple[float, list[CostReport], float]:
    """Grouped estimate of sum_s coeff_s <P_s> for arbitrary Pauli strings.

    Returns (value, one cost report per group circuit, wall ms).
    """
    groups = group_pauli_strings(strings)
    n = ansatz.n_qubits
    value = 0.0
    wall = 0.0
    costs: list[CostReport] = []
    for g_idx, group in enumerate(groups):
        if any(s.n_qubits != n for s in group):
            raise InputShapeError(f"Pauli strings must act on {n} qubits")
        circuit = ansatz.circuit().then(measurement_basis_gates(group))
        dist, ms = _measure_distribution(circuit, shots_per_circuit, derive_seed(seed, g_idx))
        wall += ms
        for s in group:
            value += s.coeff * float(dist @ _parity_signs(_mask(s.support), n))
        costs.append(cost_report(circuit, shots_per_circuit or 0))
    return value, costs, wall


def vqe_grouped_estimate(
    H: IsingHamiltonian,
    ansatz: Ansatz,
    shots_per_circuit: Optional[int] = config.BASE_SHOTS,
    seed: int = 0,
) -> EstimateReport:
    """Every member of a qubit-wise commuting group is read from the same samples."""
    _check_sizes(H, ansatz)
    _check_seed(seed)
    _check_shots(shots_per_circuit)
    if not H.terms:
        raise InvalidInputError("cannot estimate an empty Hamiltonian")
    if H.n_qubits > config.EXACT_MAX_QUBITS:
        raise ResourceError(f"statevector limited to {config.EXACT_MAX_QUBITS} qubits")

    strings = [PauliString.from_z_term(t, H.n_qubits) for t in H.terms]
    value, costs, wall = estimate_pauli_strings(strings, ansatz, shots_per_circuit, seed)
    used = 0 if shots_per_circuit is None else int(shots_per_circuit) * len(costs)
    return EstimateReport(
        method=Method.VQE_GROUPED,
        value=value,
        k=1.0,
        shots_used=used,
        circuit_count=len(costs),
        cost=combine_costs(costs, used),
        bound=None,
        seed=int(seed),
        exact_probabilities=shots_per_circuit is None,
        wall_time_ms=wall,
        n_qubits=H.n_qubits,
        n_terms=len(H),
    )


# ======================================================================================
# DISPATCH
# ======================================================================================
def exact_report(H: IsingHamiltonian, ansatz: Ansatz) -> EstimateReport:
    t0 = time.perf_counter()
    value = exact_expectation(H, ansatz)
    wall = _ms_since(t0)
    return EstimateReport(
        method=Method.EXACT,
        value=value,
        k=1.0,
        shots_used=0,
        circuit_count=1,
        cost=cost_report(ansatz.circuit(), 0),
        bound=0.0,
        seed=0,
        exact_probabilities=True,
        wall_time_ms=wall,
        n_qubits=H.n_qubits,
        n_terms=len(H),
    )


def estimate(
    method: Method | str,
    H: IsingHamiltonian,
    ansatz: Ansatz,
    k: float = config.DEFAULT_K,
    shots: Optional[int] = config.BASE_SHOTS,
    seed: int = 0,
) -> EstimateReport:
    """`shots` is the base shot count for the EVA methods and shots per circuit for VQE."""
    m = method if isinstance(method, Method) else Method.parse(method)
    if m is Method.EXACT:
        return exact_report(H, ansatz)
    if m is Method.EVA:
        return eva_estimate(H, ansatz, k, shots, seed)
    if m is Method.REDUCED_EVA:
        return reduced_eva_estimate(H, ansatz, k, shots, seed)
    if m is Method.VQE_NAIVE:
        return vqe_naive_estimate(H, ansatz, shots, seed)
    return vqe_grouped_estimate(H, ansatz, shots, seed)
