import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from filab.exceptions import DisconnectedSample, FamilyNotFound, InvalidParams
from filab.generators import (
    Family,
    FamilyParams,
    get_all_family_def,
    get_family,
    make_chain,
    register_family,
)
from tests.conftest import chain_of


def test_registered_families():
    names = {definition["family"] for definition in get_all_family_def()}
    assert {
        "rank_one",
        "hypercube",
        "cycle",
        "path",
        "birth_death",
        "random_graph",
        "product",
    } <= names
    assert all(definition["description"] for definition in get_all_family_def())


def test_unknown_family():
    with pytest.raises(FamilyNotFound):
        get_family("lollipop")
    with pytest.raises(FamilyNotFound):
        make_chain(FamilyParams(family="lollipop", n=3))


def test_register_custom_family():
    class Star(Family):
        """Simple random walk on a star with n leaves"""

        def check_params(self):
            if self.params.n is None or self.params.n < 1:
                raise InvalidParams("star needs n >= 1")

        def build(self):
            n = self.params.n
            T = np.zeros((n + 1, n + 1))
            T[0, 1:] = 1.0 / n
            T[1:, 0] = 1.0
            return [str(x) for x in range(n + 1)], T

    assert register_family(Star, "star") == "star"
    chain = make_chain(FamilyParams(family="star", n=4))
    assert chain.n == 5
    assert_allclose(chain.pi, [0.5] + [0.125] * 4)
    assert chain.diam == 2


def test_register_rejects_non_family():
    class NotAFamily:
        pass

    with pytest.raises(TypeError):
        register_family(NotAFamily)
    with pytest.raises(TypeError):
        register_family(NotAFamily(), "instance")


def test_hypercube():
    chain = chain_of("hypercube", n=3)
    assert chain.n == 8
    assert chain.labels[5] == "101"
    assert chain.d == pytest.approx(3)
    assert chain.diam == 3
    assert_allclose(chain.pi, 1 / 8)


def test_cycle_two_is_flip(flip):
    assert_array_equal(flip.T, [[0.0, 1.0], [1.0, 0.0]])


def test_rank_one_weights(rank_one_skewed):
    assert_allclose(rank_one_skewed.pi, np.arange(1, 9) / 36)
    assert_allclose(rank_one_skewed.T, np.tile(rank_one_skewed.pi, (8, 1)))


@pytest.mark.parametrize(
    "params",
    [
        dict(family="cycle", n=1),
        dict(family="hypercube"),
        dict(family="rank_one", n=3, weights=[1, 2]),
        dict(family="rank_one", weights=[1, -1]),
        dict(family="birth_death", n=3, up=[0.5], down=[0.5, 0.5]),
        dict(family="birth_death", n=3, up=[0.7, 0.7], down=[0.5, 0.5]),
        dict(family="random_graph", n=5, p=0.0, seed=1),
        dict(family="random_graph", n=5, p=0.5),
        dict(family="product", children=[dict(family="cycle", n=2)], mix=(0.5, 0.5)),
        dict(
            family="product",
            children=[dict(family="cycle", n=2), dict(family="cycle", n=2)],
            mix=(0.7, 0.7),
        ),
    ],
)
def test_invalid_params(params):
    with pytest.raises(InvalidParams):
        make_chain(FamilyParams(**params))


def test_invalid_chain_becomes_invalid_params():
    params = FamilyParams(
        family="product",
        children=[dict(family="cycle", n=2), dict(family="cycle", n=3)],
        mix=(1.0, 0.0),
    )
    with pytest.raises(InvalidParams):
        make_chain(params)


def test_birth_death_reversible(birth_death):
    flow = birth_death.pi[:, None] * birth_death.T
    assert_allclose(flow, flow.T, atol=1e-12)
    assert birth_death.diam == 9


def test_product_of_flips_is_square():
    params = FamilyParams(
        family="product",
        children=[dict(family="cycle", n=2), dict(family="cycle", n=2)],
        mix=(0.5, 0.5),
    )
    chain = make_chain(params)
    assert chain.labels == ["(0,0)", "(0,1)", "(1,0)", "(1,1)"]
    assert_array_equal(chain.T, chain_of("hypercube", n=2).T)


def test_product_stationary_measure():
    params = FamilyParams(
        family="product",
        children=[
            dict(family="rank_one", weights=[1, 3]),
            dict(family="path", n=3),
        ],
        mix=(0.3, 0.7),
    )
    chain = make_chain(params)
    assert_allclose(chain.pi, np.kron([0.25, 0.75], np.full(3, 1 / 3)), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(2, 12))
def test_random_graph_deterministic(seed, n):
    first = chain_of("random_graph", n=n, p=0.6, seed=seed)
    second = chain_of("random_graph", n=n, p=0.6, seed=seed)
    assert_array_equal(first.T, second.T)
    assert_allclose(first.T.sum(axis=1), 1.0)
    degrees = (first.T > 0).sum(axis=1)
    assert_allclose(first.pi, degrees / degrees.sum(), atol=1e-12)


def test_random_graph_disconnected():
    with pytest.raises(DisconnectedSample):
        make_chain(FamilyParams(family="random_graph", n=30, p=0.01, seed=3))
