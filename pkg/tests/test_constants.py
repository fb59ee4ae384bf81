import math
import numpy as np
import pytest
from numpy.testing import assert_allclose
import filab.constants
from filab.config import SolverOptions
from filab.constants import (
    dirac_bound,
    extremizer_residual,
    lsi_ratio,
    mlsi_extremizer_residual,
    mlsi_ratio,
    solve_tls,
    solve_tmls,
)
from filab.exceptions import InputMismatch, NoConvergence, NonPositive, TrivialChain
from filab.functionals import dirichlet, entropy
from filab.report import dumps
from filab.semigroup import SpectralCache, generator_matrix


def test_ratios_of_constants(flip):
    assert math.isnan(lsi_ratio([2.0, 2.0], flip))
    assert math.isnan(mlsi_ratio([2.0, 2.0], flip))


def test_lsi_ratio(rank_one_skewed):
    f = np.linspace(0.5, 4.0, 8)
    root = np.sqrt(f)
    expected = entropy(f, rank_one_skewed) / dirichlet(root, root, rank_one_skewed)
    assert lsi_ratio(f, rank_one_skewed) == pytest.approx(expected)
    assert lsi_ratio(3 * f, rank_one_skewed) == pytest.approx(expected)


def test_mlsi_ratio_needs_positive(flip):
    with pytest.raises(NonPositive):
        mlsi_ratio([0.0, 1.0], flip)
    with pytest.raises(NonPositive):
        extremizer_residual([0.0, 1.0], 1.0, flip)
    with pytest.raises(NonPositive):
        mlsi_extremizer_residual([-1.0, 1.0], 1.0, flip)


def test_extremizer_residual_of_constant(birth_death):
    assert extremizer_residual(np.full(10, 3.0), 2.5, birth_death) == pytest.approx(0.0, abs=1e-15)
    assert mlsi_extremizer_residual(np.full(10, 3.0), 2.5, birth_death) == pytest.approx(
        0.0, abs=1e-15
    )


def test_extremizer_residual_normalizes(birth_death):
    g = np.linspace(0.5, 2.0, 10)
    g = g / math.sqrt(birth_death.pi @ (g * g))
    expected = np.abs(1.7 * generator_matrix(birth_death) @ g + 2 * g * np.log(g)).max()
    assert extremizer_residual(4 * g, 1.7, birth_death) == pytest.approx(expected)


def test_dirac_bound(rank_one_16, rank_one_skewed):
    value, x = dirac_bound(rank_one_16)
    assert value == pytest.approx(math.log(16) / (15 / 16))
    assert x == 0
    value, x = dirac_bound(rank_one_skewed)
    assert x == 0
    assert value == pytest.approx(math.log(36) / (35 / 36))


def test_flip_is_degenerate(flip, quick_options):
    lsi = solve_tls(flip, quick_options)
    assert lsi.value == pytest.approx(1.0, abs=0.01)
    assert lsi.degenerate is True
    assert lsi.plateau == pytest.approx(1.0)
    assert lsi.t_rel == pytest.approx(0.5)
    assert lsi.chain_digest == flip.digest()
    mlsi = solve_tmls(flip, quick_options, lsi_report=lsi)
    assert mlsi.value == pytest.approx(0.25, abs=0.005)
    assert mlsi.cross_check == pytest.approx(0.0, abs=1e-8)


def test_two_point_rank_one(rank_one_two, quick_options):
    lsi = solve_tls(rank_one_two, quick_options)
    assert lsi.value == pytest.approx(2.0, abs=0.01)
    mlsi = solve_tmls(rank_one_two, quick_options)
    assert mlsi.value == pytest.approx(0.5, abs=0.01)
    assert mlsi.cross_check is None


def test_square(hypercube2, quick_options):
    lsi = solve_tls(hypercube2, quick_options)
    assert lsi.value == pytest.approx(2.0, abs=0.02)


def test_uniform_rank_one_closed_form(rank_one_16, quick_options):
    # t_LS = log(1/pi* - 1) / (1 - 2 pi*) for T(x,y) = pi(y)
    lsi = solve_tls(rank_one_16, quick_options)
    assert lsi.degenerate is False
    assert lsi.value == pytest.approx(math.log(15) / (1 - 2 / 16), rel=1e-6)
    assert lsi.value >= lsi.floor
    assert lsi.residual <= quick_options.residual_tol
    g = np.asarray(lsi.witness)
    assert rank_one_16.pi @ (g * g) == pytest.approx(1.0)
    assert lsi_ratio(g * g, rank_one_16) == pytest.approx(lsi.value, rel=1e-9)
    assert extremizer_residual(g, lsi.value, rank_one_16) <= 10 * quick_options.residual_tol


def test_value_reaches_floor(rank_one_skewed, quick_options):
    lsi = solve_tls(rank_one_skewed, quick_options)
    assert lsi.value >= lsi.floor * (1 - 1e-6)
    assert lsi.restarts_used == quick_options.restarts
    assert len(lsi.ratio_history) == quick_options.restarts


def test_mlsi_witness(rank_one_skewed, quick_options):
    mlsi = solve_tmls(rank_one_skewed, quick_options)
    f = np.asarray(mlsi.witness)
    assert rank_one_skewed.pi @ f == pytest.approx(1.0)
    if mlsi.degenerate is False:
        assert mlsi_ratio(f, rank_one_skewed) == pytest.approx(mlsi.value, rel=1e-9)
        assert mlsi_extremizer_residual(f, mlsi.value, rank_one_skewed) <= 1e-7


def test_mlsi_below_quarter_lsi(birth_death, quick_options):
    lsi = solve_tls(birth_death, quick_options)
    mlsi = solve_tmls(birth_death, quick_options, lsi_report=lsi)
    assert 4 * mlsi.value <= lsi.value * (1 + 1e-6)
    assert mlsi.value >= mlsi.plateau - 1e-12


def test_deterministic(rank_one_skewed, quick_options):
    first = solve_tls(rank_one_skewed, quick_options)
    second = solve_tls(rank_one_skewed, quick_options)
    assert dumps(first) == dumps(second)


def test_workers_do_not_change_result(rank_one_skewed):
    serial = solve_tls(rank_one_skewed, SolverOptions(restarts=12, workers=1))
    threaded = solve_tls(rank_one_skewed, SolverOptions(restarts=12, workers=3))
    assert threaded.value == pytest.approx(serial.value, rel=1e-12)
    assert_allclose(threaded.witness, serial.witness)


def test_shared_cache(birth_death, quick_options):
    cache = SpectralCache.build(birth_death)
    assert solve_tls(birth_death, quick_options, cache).value == pytest.approx(
        solve_tls(birth_death, quick_options).value
    )


def test_report_of_another_chain(flip, rank_one_two, quick_options):
    lsi = solve_tls(flip, quick_options)
    with pytest.raises(InputMismatch):
        solve_tmls(rank_one_two, quick_options, lsi_report=lsi)


def test_single_state(single_state):
    with pytest.raises(TrivialChain):
        solve_tls(single_state)


def test_all_restarts_failing(rank_one_skewed, quick_options, monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError("line search broke down")

    monkeypatch.setattr(filab.constants, "minimize", broken)
    with pytest.raises(NoConvergence) as e:
        solve_tls(rank_one_skewed, quick_options)
    report = e.value.report
    assert report.failed_restarts == quick_options.restarts
    assert report.degenerate is None


def test_dirac_floor_carries_its_witness(rank_one_16, quick_options, monkeypatch):
    def collapsed(problem, index, h0, options):
        return filab.constants._Outcome(
            index, problem.plateau, np.ones(h0.shape[0]), math.nan, True, False
        )

    monkeypatch.setattr(filab.constants, "_run_restart", collapsed)
    lsi = solve_tls(rank_one_16, quick_options)
    assert lsi.degenerate is None
    assert lsi.value == pytest.approx(math.log(16) / (15 / 16))
    g = np.asarray(lsi.witness)
    assert rank_one_16.pi @ (g * g) == pytest.approx(1.0)
    assert int(np.argmax(g)) == dirac_bound(rank_one_16)[1]
    assert lsi_ratio(g * g, rank_one_16) == pytest.approx(lsi.value, rel=1e-9)
