# eva/hamiltonian.py
"""Diagonal (Ising-type) Hamiltonians: weighted products of Pauli-Z operators.

Bit convention everywhere in the package: bit 0 <-> z = +1, bit 1 <-> z = -1, and bit q of
a basis-state index is qubit q (little-endian).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import config
from .errors import HamiltonianParseError, InputShapeError, InvalidInputError
from .shared import make_rng

MAX_TERM_DEGREE = 3


# ======================================================================================
# TYPES
# ======================================================================================
@dataclass(frozen=True)
class PauliZTerm:
    support: tuple[int, ...]
    coeff: float

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeff", float(self.coeff))

        if not 1 <= len(support) <= MAX_TERM_DEGREE:
            raise InvalidInputError(f"term support must have 1..{MAX_TERM_DEGREE} qubits, got {support}")
        if any(q < 0 for q in support):
            raise InvalidInputError(f"negative qubit index in {support}")
        if any(a >= b for a, b in zip(support, support[1:])):
            raise InvalidInputError(f"term support must be strictly increasing, got {support}")
        if not math.isfinite(self.coeff):
            raise InvalidInputError(f"non-finite coefficient on {support}")

    @property
    def degree(self) -> int:
        return len(self.support)

    @property
    def mask(self) -> int:
        m = 0
        for q in self.support:
            m |= 1 << q
        return m

    def label(self) -> str:
        return "".join(f"Z{q}" for q in self.support)


def _term_key(term: PauliZTerm):
    return (len(term.support), term.support)


@dataclass(frozen=True)
class IsingHamiltonian:
    """H = sum_t coeff_t * prod_{q in support_t} Z_q on `n_qubits` qubits.

    Construction merges duplicate supports by adding coefficients, drops terms whose
    merged |coeff| is below EVA_COEFF_EPS and sorts terms canonically (degree, support).
    """

    n_qubits: int
    terms: tuple[PauliZTerm, ...] = field(default=())

    def __post_init__(self):
        n = int(self.n_qubits)
        if n < 1:
            raise InvalidInputError(f"n_qubits must be positive, got {self.n_qubits}")
        object.__setattr__(self, "n_qubits", n)

        merged: dict[tuple[int, ...], float] = {}
        for t in self.terms:
            if not isinstance(t, PauliZTerm):
                t = PauliZTerm(*t)
            if t.support[-1] >= n:
                raise InvalidInputError(f"qubit index {t.support[-1]} out of range for n={n}")
            merged[t.support] = merged.get(t.support, 0.0) + t.coeff

        kept = [PauliZTerm(s, c) for s, c in merged.items() if abs(c) >= config.COEFF_EPS]
        object.__setattr__(self, "terms", tuple(sorted(kept, key=_term_key)))

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def scaled(self, factor: float) -> "IsingHamiltonian":
        return IsingHamiltonian(self.n_qubits, tuple(PauliZTerm(t.support, t.coeff * factor) for t in self.terms))

    def diagonal(self) -> np.ndarray:
        """Energies of all 2^n basis states, indexed little-endian."""
        idx = np.arange(1 << self.n_qubits, dtype=np.uint64)
        diag = np.zeros(idx.shape[0], dtype=float)
        for t in self.terms:
            parity = np.bitwise_count(idx & np.uint64(t.mask)) & 1
            diag += t.coeff * (1.0 - 2.0 * parity)
        return diag

    def to_dense(self) -> np.ndarray:
        """Dense matrix from 2x2 tensor products. Test oracle, independent of `diagonal`."""
        eye = np.eye(2)
        z = np.diag([1.0, -1.0])
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for t in self.terms:
            op = np.ones((1, 1))
            for q in reversed(range(self.n_qubits)):
                op = np.kron(op, z if q in t.support else eye)
            out += t.coeff * op
        return out

    def describe(self) -> str:
        return " + ".join(f"{t.coeff:.6g}*{t.label()}" for t in self.terms) or "0"


class HamiltonianNorm(NamedTuple):
    value: float
    upper_bound: bool   # True when the L1 fallback was used


@dataclass(frozen=True)
class NormalizedHamiltonian:
    hamiltonian: IsingHamiltonian
    scale: float
    norm: HamiltonianNorm

    def rescale(self) -> IsingHamiltonian:
        return self.hamiltonian.scaled(self.scale)


# ======================================================================================
# OPERATIONS
# ======================================================================================
def energy_of_bitstring(H: IsingHamiltonian, bits: Sequence[int]) -> float:
    bits = [int(b) for b in bits]
    if len(bits) != H.n_qubits:
        raise InputShapeError(f"bit vector has length {len(bits)}, Hamiltonian has {H.n_qubits} qubits")
    total = 0.0
    for t in H.terms:
        z = 1
        for q in t.support:
            z *= 1 - 2 * bits[q]
        total += t.coeff * z
    return total


def hamiltonian_norm(H: IsingHamiltonian, exact_max_qubits: int | None = None) -> HamiltonianNorm:
    """max_phi |<phi|H|phi>|.

    For a diagonal H the maximum over states is attained on a basis state, so up to
    `exact_max_qubits` (EVA_NORM_EXACT_MAX_QUBITS) the value is exact; above it the L1
    sum of |coeff| is returned and flagged as an upper bound.
    """
    cutoff = config.NORM_EXACT_MAX_QUBITS if exact_max_qubits is None else exact_max_qubits
    if not H.terms:
        return HamiltonianNorm(0.0, False)
    if H.n_qubits <= cutoff:
        return HamiltonianNorm(float(np.abs(H.diagonal()).max()), False)
    return HamiltonianNorm(H.l1_norm(), True)


def normalize(H: IsingHamiltonian) -> NormalizedHamiltonian:
    if not H.terms:
        raise InvalidInputError("cannot normalize an empty Hamiltonian")
    norm = hamiltonian_norm(H)
    if norm.value <= 1.0:
        return NormalizedHamiltonian(H, 1.0, norm)
    scale = norm.value
    normed = IsingHamiltonian(H.n_qubits, tuple(PauliZTerm(t.support, t.coeff / scale) for t in H.terms))
    return NormalizedHamiltonian(normed, scale, norm)


def candidate_supports(n: int, degree: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for d in range(1, degree + 1):
        out.extend(combinations(range(n), d))
    return out


def random_ising(n: int, p: float, degree: int, seed: int) -> IsingHamiltonian:
    """Random instance: every support of size 1..degree is present with probability p,
    coefficients uniform on [-1, 1]."""
    if degree not in (2, 3):
        raise InvalidInputError(f"degree must be 2 or 3, got {degree}")
    if n < degree:
        raise InvalidInputError(f"need n >= degree, got n={n}, degree={degree}")
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"p must lie in [0, 1], got {p}")

    supports = candidate_supports(n, degree)
    rng = make_rng(seed)
    # both draws are made for every candidate so the stream layout does not depend on p
    present = rng.random(len(supports)) < p
    coeffs = rng.uniform(-1.0, 1.0, len(supports))
    terms = tuple(PauliZTerm(s, float(c)) for s, c, keep in zip(supports, coeffs, present) if keep)
    return IsingHamiltonian(n, terms)


# ======================================================================================
# JSON
# ======================================================================================
def serialize_hamiltonian(H: IsingHamiltonian) -> str:
    # written by hand so every float carries 17 significant digits
    rows = [
        '{"qubits": [' + ", ".join(str(q) for q in t.support) + f'], "coeff": {t.coeff:.17g}}}'
        for t in H.terms
    ]
    return '{"n": ' + str(H.n_qubits) + ', "terms": [' + ", ".join(rows) + "]}"


def parse_hamiltonian(text: str | bytes) -> IsingHamiltonian:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise HamiltonianParseError(f"malformed Hamiltonian JSON: {e}") from e
    if not isinstance(doc, dict) or "n" not in doc or "terms" not in doc:
        raise HamiltonianParseError('Hamiltonian document needs keys "n" and "terms"')

    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise HamiltonianParseError(f'"n" must be a positive integer, got {n!r}')
    if not isinstance(doc["terms"], list):
        raise HamiltonianParseError('"terms" must be a list')

    seen: set[tuple[int, ...]] = set()
    terms: list[PauliZTerm] = []
    for i, row in enumerate(doc["terms"]):
        if not isinstance(row, dict) or "qubits" not in row or "coeff" not in row:
            raise HamiltonianParseError(f'term {i}: needs keys "qubits" and "coeff"')
        qubits, coeff = row["qubits"], row["coeff"]
        if not isinstance(qubits, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in qubits):
            raise HamiltonianParseError(f"term {i}: qubits must be a list of integers")
        if not isinstance(coeff, (int, float)) or isinstance(coeff, bool):
            raise HamiltonianParseError(f"term {i}: coeff must be a number")
        support = tuple(qubits)
        if any(q >= n or q < 0 for q in support):
            raise HamiltonianParseError(f"term {i}: qubit index out of range for n={n}: {list(support)}")
        if support in seen:
            raise HamiltonianParseError(f"term {i}: duplicate support {list(support)}")
        seen.add(support)
        try:
            terms.append(PauliZTerm(support, float(coeff)))
        except InvalidInputError as e:
            raise HamiltonianParseError(f"term {i}: {e}") from e

    return IsingHamiltonian(n, tuple(terms))


def load_hamiltonian(path) -> IsingHamiltonian:
    p = Path(path)
    if not p.exists():
        raise HamiltonianParseError(f"Hamiltonian file not found: {p}")
    return parse_hamiltonian(p.read_text(encoding="utf-8"))

