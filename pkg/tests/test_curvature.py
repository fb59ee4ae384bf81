import math
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from filab.curvature import (
    bakry_emery_kappa,
    curvature_forms,
    curvature_report,
    kantorovich_dual,
    ollivier_kappa,
    ollivier_pair,
    state_curvature,
    transport_plan,
    wasserstein1,
)
from filab.exceptions import DimensionMismatch, KernelViolation, NotProbability, TrivialChain
from filab.functionals import gamma, gamma2, lipschitz
from tests.conftest import chain_of


TWO_POINT = np.array([[0.0, 1.0], [1.0, 0.0]])
RANDOM_GRAPH = chain_of("random_graph", n=7, p=0.5, seed=11)


# T(x,y) = pi(y) has kappa_x = 1/2 + pi(x); n = 2 is the flip at half speed
@pytest.mark.parametrize("n", [2, 4, 16])
def test_bakry_emery_uniform_rank_one(n):
    kappa, per_state, _ = bakry_emery_kappa(chain_of("rank_one", n=n))
    assert kappa == pytest.approx(0.5 + 1 / n, abs=1e-9)
    assert kappa >= 0.5
    assert_allclose(per_state, 0.5 + 1 / n, atol=1e-9)


def test_bakry_emery_skewed_rank_one(rank_one_skewed):
    kappa, per_state, _ = bakry_emery_kappa(rank_one_skewed)
    assert kappa == pytest.approx(0.5 + rank_one_skewed.pi_star, abs=1e-9)
    assert kappa >= 0.5
    assert_allclose(per_state, 0.5 + rank_one_skewed.pi, atol=1e-9)


def test_bakry_emery_flip_and_square(flip, hypercube2):
    assert bakry_emery_kappa(flip)[0] == pytest.approx(2.0, abs=1e-9)
    assert bakry_emery_kappa(hypercube2)[0] == pytest.approx(1.0, abs=1e-9)


def test_bakry_emery_witness(birth_death):
    kappa, per_state, witnesses = bakry_emery_kappa(birth_death)
    assert kappa == per_state.min()
    for x in range(birth_death.n):
        f = witnesses[x]
        ratio = gamma2(f, birth_death)[x] / gamma(f, f, birth_death)[x]
        assert ratio == pytest.approx(per_state[x], rel=1e-7, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_gamma2_dominates(seed):
    kappa, _, _ = bakry_emery_kappa(RANDOM_GRAPH)
    f = np.random.default_rng(seed).standard_normal(RANDOM_GRAPH.n)
    slack = gamma2(f, RANDOM_GRAPH) - kappa * gamma(f, f, RANDOM_GRAPH)
    assert np.all(slack >= -1e-9 * (1 + np.abs(gamma2(f, RANDOM_GRAPH))))


def test_curvature_forms(flip):
    A, B = curvature_forms(flip)
    f = np.array([0.3, -1.2])
    for x in range(2):
        assert f @ A[x] @ f == pytest.approx(gamma2(f, flip)[x])
        assert f @ B[x] @ f == pytest.approx(gamma(f, f, flip)[x])


def test_state_curvature_on_full_range():
    kappa, f = state_curvature(np.diag([2.0, 3.0]), np.eye(2))
    assert kappa == pytest.approx(2.0)
    assert abs(f[1]) < 1e-12


def test_kernel_violation():
    with pytest.raises(KernelViolation):
        state_curvature(-np.eye(2), np.diag([1.0, 0.0]))


def test_single_state(single_state):
    with pytest.raises(TrivialChain):
        bakry_emery_kappa(single_state)
    with pytest.raises(TrivialChain):
        ollivier_kappa(single_state)


def test_ollivier_known_values(rank_one_16, flip, hypercube2):
    assert ollivier_kappa(rank_one_16)[0] == pytest.approx(1.0, abs=1e-9)
    assert ollivier_kappa(flip)[0] == pytest.approx(2.0, abs=1e-9)
    assert ollivier_kappa(hypercube2)[0] == pytest.approx(1.0, abs=1e-9)


def test_ollivier_pair_witness(path4):
    value, f = ollivier_pair(path4, 0, 3)
    assert f[3] == pytest.approx(0.0, abs=1e-12)
    assert f[0] - f[3] == pytest.approx(3.0)
    assert lipschitz(f, path4)[0] <= 1 + 1e-9
    with pytest.raises(ValueError):
        ollivier_pair(path4, 1, 1)


def test_ollivier_edges_only(hypercube3):
    kappa, per_pair, witnesses = ollivier_kappa(hypercube3)
    fast, fast_pairs, fast_witnesses = ollivier_kappa(hypercube3, edges_only=True)
    assert fast == pytest.approx(kappa, abs=1e-9)
    assert math.isnan(fast_pairs[0, 3])
    assert not math.isnan(fast_pairs[0, 1])
    assert set(fast_witnesses) == {tuple(p) for p in np.argwhere(hypercube3.edges)}
    assert all(math.isnan(per_pair[x, x]) for x in range(8))
    assert len(witnesses) == 8 * 7


def test_curvature_report(hypercube2):
    report = curvature_report(hypercube2, workers=2)
    assert report.chain_digest == hypercube2.digest()
    assert report.kappa_be == pytest.approx(1.0)
    assert report.kappa_ollivier == pytest.approx(1.0)
    assert report.per_pair[0][0] is None
    assert report.per_state[report.be_state] == report.kappa_be
    x, y = report.ollivier_pair
    assert report.per_pair[x][y] == report.kappa_ollivier
    assert not report.edges_only


def test_wasserstein_examples():
    assert wasserstein1([0.5, 0.5], [0.5, 0.5], TWO_POINT) == 0.0
    assert wasserstein1([1.0, 0.0], [0.0, 1.0], TWO_POINT) == pytest.approx(1.0)
    assert wasserstein1([1.0, 0.0], [0.25, 0.75], TWO_POINT) == pytest.approx(0.75)


def test_wasserstein_dirac_masses(path4):
    mu, nu = np.eye(4)[0], np.eye(4)[3]
    assert wasserstein1(mu, nu, path4.dist) == pytest.approx(3.0)


def test_wasserstein_bad_measures():
    with pytest.raises(NotProbability):
        wasserstein1([0.6, 0.6], [0.5, 0.5], TWO_POINT)
    with pytest.raises(NotProbability):
        wasserstein1([1.5, -0.5], [0.5, 0.5], TWO_POINT)
    with pytest.raises(DimensionMismatch):
        wasserstein1([1.0], [0.5, 0.5], TWO_POINT)


def test_transport_plan_marginals(birth_death):
    mu = np.eye(10)[0]
    plan = transport_plan(mu, birth_death.pi, birth_death.dist)
    assert_allclose(plan.sum(axis=1), mu, atol=1e-12)
    assert_allclose(plan.sum(axis=0), birth_death.pi, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_strong_duality(seed):
    rng = np.random.default_rng(seed)
    mu, nu = rng.dirichlet(np.ones(RANDOM_GRAPH.n), size=2)
    primal = wasserstein1(mu, nu, RANDOM_GRAPH.dist)
    dual, f = kantorovich_dual(mu, nu, RANDOM_GRAPH.dist)
    assert dual == pytest.approx(primal, abs=1e-8)
    assert f[0] == pytest.approx(0.0, abs=1e-12)
    assert lipschitz(f, RANDOM_GRAPH)[0] <= 1 + 1e-9
