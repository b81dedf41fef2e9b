"""Single-circuit expectation values of diagonal (Ising-type) Hamiltonians."""
from .circuits import Ansatz, CostReport, hadamard_test_circuit, reduced_eva_circuit
from .errors import (
    ConstraintError,
    AnsatzParseError,
    EvaError,
    HamiltonianParseError,
    InputShapeError,
    InvalidInputError,
    ParseError,
    ResourceError,
)
from .estimators import (
    EstimateReport,
    Method,
    PauliString,
    eva_estimate,
    exact_expectation,
    reduced_eva_estimate,
    vqe_grouped_estimate,
    vqe_naive_estimate,
)
from .hamiltonian import IsingHamiltonian, PauliZTerm, normalize, random_ising

__all__ = [
    "Ansatz",
    "AnsatzParseError",
    "ConstraintError",
    "CostReport",
    "EstimateReport",
    "EvaError",
    "HamiltonianParseError",
    "InputShapeError",
    "ParseError",
    "InvalidInputError",
    "IsingHamiltonian",
    "Method",
    "PauliString",
    "PauliZTerm",
    "ResourceError",
    "eva_estimate",
    "exact_expectation",
    "hadamard_test_circuit",
    "normalize",
    "random_ising",
    "reduced_eva_circuit",
    "reduced_eva_estimate",
    "vqe_grouped_estimate",
    "vqe_naive_estimate",
]
