# conftest.py
# Shared fixtures. Living at the repo root puts the `eva` package on sys.path for pytest.
import json
import math

import pytest

from eva.circuits import Ansatz
from eva.hamiltonian import IsingHamiltonian, PauliZTerm, normalize, random_ising
from eva.simulator import Gate


@pytest.fixture
def z0():
    """H = 1.0 * Z0 on one qubit."""
    return IsingHamiltonian(1, (PauliZTerm((0,), 1.0),))


@pytest.fixture
def zero_ansatz():
    return Ansatz(1, ())


@pytest.fixture
def plus_y_ansatz():
    """RX(pi/2)|0>: equal |0>/|1> weights, <Z> = 0."""
    return Ansatz(1, (Gate.rx(0, math.pi / 2),))


@pytest.fixture
def ising_corpus():
    """Seeded normalized instances, n in 2..6, degree 2 and 3."""
    out = []
    for i in range(40):
        degree = 2 + i % 2
        n = degree + i % (7 - degree)
        H = random_ising(n, 0.6, degree, seed=1000 + i)
        if H.terms:
            out.append(normalize(H).hamiltonian)
    return out


@pytest.fixture
def write_json_file(tmp_path):
    def _write(name: str, obj) -> str:
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)

    return _write
