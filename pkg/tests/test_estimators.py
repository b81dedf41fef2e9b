import math

import numpy as np
import pytest

from eva.circuits import Ansatz, basis_state_ansatz, random_basis_ansatz, random_single_axis_ansatz
from eva.errors import ConstraintError, InputShapeError, InvalidInputError
from eva.estimators import (
    EstimateReport,
    Method,
    PauliString,
    estimate,
    estimate_pauli_strings,
    eva_error_bound,
    eva_estimate,
    exact_expectation,
    group_pauli_strings,
    imag_exponential_exact,
    measurement_basis_gates,
    reduced_bound_for,
    reduced_error_bound,
    reduced_error_bound_general,
    reduced_eva_estimate,
    shots_for_k,
    vqe_grouped_estimate,
    vqe_naive_estimate,
)
from eva.hamiltonian import IsingHamiltonian, PauliZTerm, hamiltonian_norm, normalize, random_ising
from eva.simulator import Gate, GateKind, run


def zterm(coeff, *support):
    return PauliZTerm(tuple(support), coeff)


def bound_corpus(count=200, max_qubits=8, seed0=50_000):
    """(H normalized and shrunk, ansatz) pairs over degrees 2 and 3."""
    rng = np.random.default_rng(seed0)
    out = []
    for i in range(count):
        degree = int(rng.choice([2, 3]))
        n = int(rng.integers(degree, max_qubits + 1))
        H = random_ising(n, float(rng.uniform(0.2, 1.0)), degree, seed=seed0 + i)
        if not H.terms:
            continue
        H = normalize(H).hamiltonian.scaled(float(rng.uniform(0.05, 1.0)))
        out.append((H, random_single_axis_ansatz(n, seed=seed0 + i)))
    return out


# ----------------------------
# exact values
# ----------------------------
def test_exact_expectation_examples(z0, zero_ansatz, plus_y_ansatz):
    assert exact_expectation(z0, zero_ansatz) == pytest.approx(1.0)
    assert exact_expectation(z0, Ansatz(1, (Gate.rx(0, math.pi),))) == pytest.approx(-1.0)
    assert exact_expectation(z0, plus_y_ansatz) == pytest.approx(0.0, abs=1e-12)


def test_exact_expectation_size_mismatch(z0):
    with pytest.raises(InputShapeError):
        exact_expectation(z0, Ansatz(2, ()))


def test_imag_exponential_examples(z0, zero_ansatz):
    assert imag_exponential_exact(z0, zero_ansatz, 2.0) == pytest.approx(0.4794255, abs=1e-7)
    assert imag_exponential_exact(z0, basis_state_ansatz([1]), 2.0) == pytest.approx(-math.sin(0.5))


def test_imag_exponential_in_unit_range():
    for H, ansatz in bound_corpus(30):
        for k in (1.0, 2.0):
            assert -1.0 <= imag_exponential_exact(H.scaled(20.0), ansatz, k) <= 1.0


# ----------------------------
# shot policy and bounds
# ----------------------------
@pytest.mark.parametrize("base,k,want", [(1000, 1, 1000), (1000, 4, 16000), (1000, 1.5, 2250)])
def test_shots_for_k(base, k, want):
    assert shots_for_k(base, k) == want


def test_shots_for_k_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        shots_for_k(0, 2)
    with pytest.raises(InvalidInputError):
        shots_for_k(100, 0.5)


def test_eva_bound_values(z0):
    assert eva_error_bound(z0, 2) == pytest.approx(1 / 48)
    assert eva_error_bound(z0, 1) == pytest.approx(1 / 6)
    gap = abs(math.sin(0.5) - 0.5)
    assert gap == pytest.approx(0.0205745, abs=1e-6)
    assert eva_error_bound(z0, 2) == pytest.approx(0.0208333, abs=1e-6)
    assert gap <= eva_error_bound(z0, 2)


def test_bounds_require_normalized_hamiltonian():
    big = IsingHamiltonian(1, (zterm(2.0, 0),))
    with pytest.raises(InvalidInputError):
        eva_error_bound(big, 2)
    with pytest.raises(InvalidInputError):
        reduced_error_bound(big, 2)


def test_reduced_bound_values(z0):
    assert reduced_error_bound(z0, 2) == pytest.approx(0.125)
    small = IsingHamiltonian(1, (zterm(0.1, 0),))
    assert reduced_error_bound(small, 1) == pytest.approx(0.005)
    assert reduced_error_bound_general(small, 1) == pytest.approx(0.02)


def test_reduced_bound_selection():
    H = IsingHamiltonian(2, (zterm(0.5, 0, 1),))
    assert reduced_bound_for(H, 2, basis_state_ansatz([1, 0])) == reduced_error_bound(H, 2)
    assert reduced_bound_for(H, 2, random_single_axis_ansatz(2, seed=1)) == reduced_error_bound_general(H, 2)
    # ||H||/k above the small-angle cutoff falls back to the general bound
    assert reduced_bound_for(IsingHamiltonian(1, (zterm(1.0, 0),)), 1, basis_state_ansatz([0])) == pytest.approx(2.0)


def test_eva_bound_holds_on_random_corpus():
    for H, ansatz in bound_corpus():
        exact = exact_expectation(H, ansatz)
        for k in (1.0, 2.0, 4.0, 8.0):
            gap = abs(imag_exponential_exact(H, ansatz, k) - exact / k)
            assert gap <= eva_error_bound(H, k) + 1e-12


def test_convergence_rate_is_inverse_square():
    err = {k: abs(k * math.sin(1 / k) - 1) for k in (2, 4)}
    assert err[2] == pytest.approx(0.0411489, abs=1e-6)
    assert err[4] == pytest.approx(0.0103842, abs=1e-6)
    assert 3.71 <= err[2] / err[4] <= 4.21


# ----------------------------
# EVA
# ----------------------------
def test_eva_exact_mode_example(z0, zero_ansatz):
    rep = eva_estimate(z0, zero_ansatz, k=2, base_shots=None, seed=0)
    assert rep.method is Method.EVA
    assert rep.value == pytest.approx(0.9588511, abs=1e-7)
    assert abs(rep.value - 1.0) <= rep.bound
    assert rep.bound == pytest.approx(1 / 24)
    assert rep.shots_used == 0 and rep.exact_probabilities
    assert rep.circuit_count == 1 and rep.cost.circuit_count == 1


def test_eva_rescales_by_normalization(zero_ansatz):
    H = IsingHamiltonian(1, (zterm(2.0, 0),))
    rep = eva_estimate(H, zero_ansatz, k=2, base_shots=None)
    assert rep.scale == 2.0
    assert rep.value == pytest.approx(2.0 * 2 * math.sin(0.5))
    assert rep.bound == pytest.approx(2.0 / 24)


@pytest.mark.parametrize("k", [0.5, math.inf, math.nan])
def test_eva_rejects_bad_k(z0, zero_ansatz, k):
    with pytest.raises(InvalidInputError):
        eva_estimate(z0, zero_ansatz, k=k)


def test_eva_deterministic_per_seed():
    H = random_ising(4, 0.6, 3, seed=2)
    ansatz = random_single_axis_ansatz(4, seed=3)
    a = eva_estimate(H, ansatz, k=2, base_shots=500, seed=42)
    b = eva_estimate(H, ansatz, k=2, base_shots=500, seed=42)
    assert a.value == b.value and a.shots_used == b.shots_used == 2000
    assert a.cost == b.cost


def test_eva_cost_counts_toffolis():
    H = IsingHamiltonian(3, (zterm(0.3, 0, 1), zterm(0.2, 0, 1, 2), zterm(-0.1, 2)))
    rep = eva_estimate(H, Ansatz(3, ()), k=2, base_shots=10, seed=1)
    # 2 CNOTs for the pair, 4 for the triple, all promoted
    assert rep.cost.toffoli_count == 6
    assert rep.cost.expanded_cnot_count == 36


def test_sampled_eva_is_unbiased():
    H = IsingHamiltonian(1, (zterm(0.8, 0),))
    ansatz = Ansatz(1, (Gate.rx(0, 0.7),))
    k = 2.0
    want = k * imag_exponential_exact(H, ansatz, k)
    values = np.array([eva_estimate(H, ansatz, k, base_shots=50, seed=s).value for s in range(1000)])
    se = values.std(ddof=1) / math.sqrt(len(values))
    assert abs(values.mean() - want) <= 4 * se


def test_shot_policy_controls_spread(z0, plus_y_ansatz):
    def spread(k, scale):
        vals = [eva_estimate(z0, plus_y_ansatz, k, 1000, seed=s, scale_shots=scale).value for s in range(200)]
        return float(np.std(vals, ddof=1))

    assert spread(8.0, False) > 2 * spread(1.0, False)
    ratio = spread(8.0, True) / spread(1.0, True)
    assert 0.5 <= ratio <= 2.0


# ----------------------------
# reduced EVA
# ----------------------------
def test_reduced_exact_mode_example():
    H = IsingHamiltonian(1, (zterm(0.1, 0),))
    rep = reduced_eva_estimate(H, Ansatz(1, ()), k=1, base_shots=None)
    assert rep.value == pytest.approx(0.0993347, abs=1e-7)
    assert abs(rep.value - 0.1) == pytest.approx(0.000665, abs=1e-6)
    assert rep.bound == pytest.approx(0.005)
    assert rep.cost.toffoli_count == 0 and rep.circuit_count == 1


def test_reduced_rejects_h_gate(z0):
    with pytest.raises(ConstraintError):
        reduced_eva_estimate(z0, Ansatz(1, (Gate.h(0),)), k=2)


def test_reduced_shot_policy(z0, zero_ansatz):
    assert reduced_eva_estimate(z0, zero_ansatz, k=4, base_shots=100).shots_used == 1600
    assert reduced_eva_estimate(z0, zero_ansatz, k=2, base_shots=100).shots_used == 400


def test_reduced_nominal_bound_on_basis_states():
    for i, (H, _) in enumerate(bound_corpus(100, seed0=60_000)):
        ansatz = random_basis_ansatz(H.n_qubits, seed=i)
        exact = exact_expectation(H, ansatz)
        for k in (2.0, 4.0, 8.0):
            rep = reduced_eva_estimate(H, ansatz, k, base_shots=None)
            gap = abs(rep.value / k - exact / k)
            assert gap <= reduced_error_bound(H, k) + 1e-12


def test_reduced_general_bound_on_single_axis_states():
    for H, ansatz in bound_corpus():
        exact = exact_expectation(H, ansatz)
        for k in (2.0, 4.0, 8.0):
            rep = reduced_eva_estimate(H, ansatz, k, base_shots=None)
            gap = abs(rep.value / k - exact / k)
            assert gap <= reduced_bound_for(H, k, ansatz) + 1e-12
            assert abs(rep.value - exact) <= rep.bound + 1e-12


def test_nominal_reduced_bound_fails_off_basis_states(plus_y_ansatz):
    H = IsingHamiltonian(1, (zterm(0.1, 0),))
    rep = reduced_eva_estimate(H, plus_y_ansatz, k=1, base_shots=None)
    gap = abs(rep.value - exact_expectation(H, plus_y_ansatz))
    assert gap == pytest.approx(math.sin(0.1) ** 2, abs=1e-12)
    assert gap > reduced_error_bound(H, 1)
    assert gap <= reduced_error_bound_general(H, 1)


# ----------------------------
# VQE baselines
# ----------------------------
def test_naive_one_circuit_per_term():
    H = random_ising(5, 1.0, 2, seed=6)
    assert len(H) == 15
    rep = vqe_naive_estimate(H, random_single_axis_ansatz(5, seed=1), shots_per_circuit=100, seed=3)
    assert rep.circuit_count == rep.cost.circuit_count == 15
    assert rep.shots_used == 1500
    assert rep.bound is None and rep.k == 1.0


def test_naive_ten_terms():
    H = random_ising(4, 1.0, 2, seed=0)
    assert vqe_naive_estimate(H, Ansatz(4, ()), shots_per_circuit=10).circuit_count == 10


@pytest.mark.parametrize("estimator", [vqe_naive_estimate, vqe_grouped_estimate])
def test_vqe_rejects_empty_hamiltonian(estimator, zero_ansatz):
    cancelled = IsingHamiltonian(1, (PauliZTerm((0,), 0.5), PauliZTerm((0,), -0.5)))
    assert cancelled.terms == ()
    with pytest.raises(InvalidInputError):
        estimator(cancelled, zero_ansatz, 100, seed=0)


def test_naive_exact_on_zero_state(z0, zero_ansatz):
    for shots in (1, 17, 1000):
        assert vqe_naive_estimate(z0, zero_ansatz, shots, seed=5).value == 1.0


def test_vqe_exact_modes_match_exact_expectation():
    for H, ansatz in bound_corpus(30):
        exact = exact_expectation(H, ansatz)
        assert vqe_naive_estimate(H, ansatz, None).value == pytest.approx(exact, abs=1e-12)
        assert vqe_grouped_estimate(H, ansatz, None).value == pytest.approx(exact, abs=1e-12)


def test_grouped_is_one_circuit_for_ising():
    H = random_ising(6, 0.7, 3, seed=12)
    ansatz = random_single_axis_ansatz(6, seed=2)
    grouped = vqe_grouped_estimate(H, ansatz, 200, seed=1)
    naive = vqe_naive_estimate(H, ansatz, 200, seed=1)
    assert grouped.circuit_count == 1
    assert grouped.shots_used <= naive.shots_used
    assert grouped.cost.toffoli_count == 0


def test_vqe_deterministic_per_seed():
    H = random_ising(4, 0.8, 3, seed=21)
    ansatz = random_single_axis_ansatz(4, seed=22)
    a, b = vqe_naive_estimate(H, ansatz, 300, seed=7), vqe_naive_estimate(H, ansatz, 300, seed=7)
    assert a.value == b.value and a.cost == b.cost
    assert vqe_grouped_estimate(H, ansatz, 300, seed=7).value == vqe_grouped_estimate(H, ansatz, 300, seed=7).value


def test_estimator_agreement_at_large_k():
    for H, ansatz in bound_corpus(20):
        exact = exact_expectation(H, ansatz)
        rep = eva_estimate(H, ansatz, k=64, base_shots=None)
        assert abs(rep.value - exact) <= rep.bound + 1e-12


# ----------------------------
# Pauli strings and grouping
# ----------------------------
def test_pauli_string_validation():
    with pytest.raises(InvalidInputError):
        PauliString.from_label("III")
    with pytest.raises(InvalidInputError):
        PauliString.from_label("XQ")
    s = PauliString.from_label("zix", 0.5)
    assert s.letters == ("Z", "I", "X") and s.support == (0, 2) and s.label() == "ZIX"


def test_grouping_examples():
    zs = [PauliString.from_label(lbl) for lbl in ("ZZI", "ZII", "IZZ")]
    assert len(group_pauli_strings(zs)) == 1
    assert len(group_pauli_strings([PauliString.from_label("X"), PauliString.from_label("Z")])) == 2
    assert len(group_pauli_strings([PauliString.from_label("XY")])) == 1
    with pytest.raises(InvalidInputError):
        group_pauli_strings([])


def test_grouping_orders_by_weight_and_commutes():
    strings = [
        PauliString.from_label("XI", 0.1),
        PauliString.from_label("ZI", 0.9),
        PauliString.from_label("IZ", 0.5),
        PauliString.from_label("XX", 0.3),
    ]
    groups = group_pauli_strings(strings)
    assert groups[0][0].coeff == 0.9
    assert sum(len(g) for g in groups) == len(strings)
    for g in groups:
        for a in g:
            for b in g:
                assert all(x == y or "I" in (x, y) for x, y in zip(a.letters, b.letters))


def test_measurement_basis_gates():
    group = [PauliString.from_label("XIY"), PauliString.from_label("XZI")]
    gates = measurement_basis_gates(group)
    assert gates == [Gate.h(0), Gate.rx(2, math.pi / 2)]
    assert all(g.kind in (GateKind.H, GateKind.RX) for g in gates)


def test_general_pauli_strings_exact_mode():
    # <X> = 1 on |+>, <Y> = -1 on RX(pi/2)|0>
    plus = Ansatz(1, (Gate.h(0),))
    value, costs, _ = estimate_pauli_strings([PauliString.from_label("X", 2.0)], plus, None, seed=0)
    assert value == pytest.approx(2.0)
    assert len(costs) == 1
    minus_y = Ansatz(1, (Gate.rx(0, math.pi / 2),))
    value, _, _ = estimate_pauli_strings([PauliString.from_label("Y")], minus_y, None, seed=0)
    assert value == pytest.approx(-1.0)


def test_pauli_strings_agree_with_dense_expectation():
    rng = np.random.default_rng(0)
    ansatz = Ansatz(3, (Gate.h(0), Gate.rx(1, 0.4), Gate.cnot(0, 2), Gate.rz(2, 1.1), Gate.rx(0, 0.3)))
    labels = ["XIZ", "ZZI", "IYX", "XXX", "IIZ"]
    strings = [PauliString.from_label(lbl, float(c)) for lbl, c in zip(labels, rng.uniform(-1, 1, len(labels)))]
    value, _, _ = estimate_pauli_strings(strings, ansatz, None, seed=0)

    psi = run(ansatz.circuit()).amplitudes
    mats = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
    }
    want = 0.0
    for s in strings:
        op = np.ones((1, 1))
        for q in reversed(range(3)):
            op = np.kron(op, mats[s.letters[q]])
        want += s.coeff * float(np.real(psi.conj() @ op @ psi))
    assert value == pytest.approx(want, abs=1e-12)


# ----------------------------
# dispatch and reports
# ----------------------------
def test_method_parse_aliases():
    assert Method.parse("reduced") is Method.REDUCED_EVA
    assert Method.parse("VQE-NAIVE") is Method.VQE_NAIVE
    with pytest.raises(InvalidInputError):
        Method.parse("qpe")


def test_dispatch_and_report_dict(z0, zero_ansatz):
    exact = estimate("exact", z0, zero_ansatz)
    assert exact.value == 1.0 and exact.method is Method.EXACT
    rep = estimate(Method.EVA, z0, zero_ansatz, k=2, shots=None)
    d = rep.to_dict()
    assert d["method"] == "eva"
    assert d["cost"]["circuit_count"] == 1
    assert d["exact_probabilities"] is True
    assert isinstance(rep, EstimateReport)


def test_norm_of_shrunk_corpus_is_normalized():
    for H, _ in bound_corpus(20):
        assert hamiltonian_norm(H).value <= 1.0 + 1e-12
