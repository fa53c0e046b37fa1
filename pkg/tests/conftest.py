import json
from pathlib import Path

import numpy as np
import pytest

from qflow import QuantumFlowDetector, SplitSpec, load_dataset, make_split
from qflow.gatepool import circuit_from_dict

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_circuit(name):
    return circuit_from_dict(json.loads((FIXTURES / "reference_circuits" / f"{name}.json").read_text()))


def random_state_vector(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def iris():
    return load_dataset("iris")


@pytest.fixture(scope="session")
def wine():
    return load_dataset("wine")


@pytest.fixture(scope="session")
def iris12_split(iris):
    return make_split(iris, SplitSpec(1, 2, 0.5, 0))


@pytest.fixture(scope="session")
def iris12_flow(iris, iris12_split):
    """KL flow on Iris 1-2 with the command-line defaults (5 restarts, 2e4 nodes each)."""
    return QuantumFlowDetector(n_restarts=5, random_state=0).fit(iris12_split.train(iris))
