import json
import numpy as np
import pytest
from filab.chain import validate_chain
from filab.config import SolverOptions
from filab.generators import FamilyParams, make_chain


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: battery-level runs taking minutes")


def chain_of(family: str, **params):
    return make_chain(FamilyParams(family=family, **params))


@pytest.fixture
def flip():
    return chain_of("cycle", n=2)


@pytest.fixture
def rank_one_two():
    return chain_of("rank_one", n=2)


@pytest.fixture
def rank_one_16():
    return chain_of("rank_one", n=16)


@pytest.fixture
def rank_one_skewed():
    return chain_of("rank_one", weights=[1, 2, 3, 4, 5, 6, 7, 8])


@pytest.fixture
def hypercube2():
    return chain_of("hypercube", n=2)


@pytest.fixture
def hypercube3():
    return chain_of("hypercube", n=3)


@pytest.fixture
def path4():
    return chain_of("path", n=4)


@pytest.fixture
def birth_death():
    up = [0.6] * 9
    down = [0.2] * 9
    return chain_of("birth_death", n=10, up=up, down=down)


@pytest.fixture
def single_state():
    return validate_chain([[1.0]])


@pytest.fixture
def directed_cycle():
    """Irreducible, stationary for the uniform measure, not reversible"""
    return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])


@pytest.fixture
def quick_options():
    return SolverOptions(restarts=16, seed=0)


@pytest.fixture
def chain_file(tmp_path):
    """Write a Chain JSON document and return its path"""

    def write(document, name="chain.json"):
        path = tmp_path / name
        if isinstance(document, str):
            path.write_text(document)
        else:
            path.write_text(json.dumps(document))
        return path

    return write
