import math
import numpy as np
import pytest
from filab.config import Suite, Tolerances
from filab.constants import solve_tls, solve_tmls
from filab.curvature import curvature_report
from filab.exceptions import InputMismatch, NotApplicable
from filab.functionals import expectation, lipschitz
from filab.report import Status, dumps
from filab.utils import derive_rng
from filab.verify import (
    LEMMA_CHECKS,
    check_lemmas,
    check_theorems,
    conjecture_probe,
    lipschitz_sample,
    verify_chain,
)
from tests.conftest import chain_of


def solved(chain, options):
    lsi = solve_tls(chain, options)
    mlsi = solve_tmls(chain, options, lsi_report=lsi)
    return lsi, mlsi, curvature_report(chain)


def by_id(records):
    return {record.check_id: record for record in records}


def test_theorems_on_flip(flip, quick_options):
    records = by_id(check_theorems(flip, *solved(flip, quick_options)))
    for check_id in ("T1-regularity", "T2-upper", "T3-curvature"):
        assert records[check_id].status == Status.skipped
        assert "d < 2" in records[check_id].reason
    assert records["T2-lower"].status == Status.passed
    assert records["T2-lower"].witness is None


def test_theorems_on_rank_one(rank_one_16, quick_options):
    records = check_theorems(rank_one_16, *solved(rank_one_16, quick_options))
    assert {r.check_id for r in records} == {
        "T1-regularity",
        "T2-lower",
        "T2-upper",
        "T3-curvature",
    }
    assert all(r.status == Status.passed for r in records)


def test_regularity_skipped_when_degenerate(hypercube2, quick_options):
    records = by_id(check_theorems(hypercube2, *solved(hypercube2, quick_options)))
    assert records["T1-regularity"].status == Status.skipped
    assert records["T2-upper"].status == Status.passed


def test_lemmas_on_rank_one(rank_one_16, quick_options):
    lsi, mlsi, curvature = solved(rank_one_16, quick_options)
    records = check_lemmas(rank_one_16, seed=1, samples=30, lsi=lsi, mlsi=mlsi, curvature=curvature)
    assert len(records) == len(LEMMA_CHECKS)
    assert len({r.check_id for r in records}) == len(records)
    failed = [r.check_id for r in records if r.status == Status.failed]
    assert failed == []
    for record in records:
        if record.status == Status.skipped:
            assert record.reason
        else:
            assert record.samples >= 1


def test_lemmas_on_flip(flip, quick_options):
    lsi, mlsi, curvature = solved(flip, quick_options)
    records = by_id(check_lemmas(flip, seed=3, samples=20, lsi=lsi, mlsi=mlsi, curvature=curvature))
    assert records["Tf-subcommutation-tight"].status == Status.passed
    assert records["Tg-contraction-tight"].status == Status.passed
    assert records["Ln-wasserstein-contraction"].status == Status.passed
    assert records["Lj-dirichlet-identity"].status == Status.passed


def test_failure_carries_witness(rank_one_16, quick_options):
    lsi, mlsi, curvature = solved(rank_one_16, quick_options)
    inflated = curvature.model_copy(update={"kappa_be": 5.0})
    records = by_id(
        check_lemmas(rank_one_16, seed=2, samples=10, lsi=lsi, mlsi=mlsi, curvature=inflated)
    )
    record = records["Lf-subcommutation"]
    assert record.status == Status.failed
    assert record.margin < 0
    assert record.witness["seed"] == 2
    assert 0 <= record.witness["sample"] < 10
    assert record.witness["t"] in (0.05, 0.2, 1.0, 5.0)
    assert len(record.witness["log_values"]) == 16
    assert records["Lm-spectral"].status == Status.failed


def test_lemmas_need_samples(flip):
    with pytest.raises(ValueError):
        check_lemmas(flip, samples=0)


def test_reports_of_another_chain(flip, rank_one_two, quick_options):
    lsi, mlsi, curvature = solved(flip, quick_options)
    with pytest.raises(InputMismatch):
        check_theorems(rank_one_two, lsi, mlsi, curvature)
    with pytest.raises(InputMismatch):
        verify_chain(rank_one_two, lsi=lsi)


def test_lipschitz_sample(birth_death):
    for index in range(20):
        f = lipschitz_sample(birth_death, derive_rng(5, index))
        assert lipschitz(f, birth_death)[0] <= 1 + 1e-12
        assert expectation(f, birth_death) == pytest.approx(0.0, abs=1e-12)


def test_conjecture_probe(flip, rank_one_16, quick_options):
    lsi, _, curvature = solved(flip, quick_options)
    with pytest.raises(NotApplicable):
        conjecture_probe(flip, lsi, curvature)
    lsi, _, curvature = solved(rank_one_16, quick_options)
    probe = conjecture_probe(rank_one_16, lsi, curvature)
    assert probe == pytest.approx(lsi.value * curvature.kappa_ollivier / math.log(16))


def test_verify_theorem_suite(rank_one_16, quick_options):
    lsi, mlsi, curvature = solved(rank_one_16, quick_options)
    report = verify_chain(
        rank_one_16, Suite.theorems, lsi=lsi, mlsi=mlsi, curvature=curvature
    )
    ids = [r.check_id for r in report.checks]
    assert ids == sorted(ids)
    assert all(i.startswith("T") and i[1].isdigit() for i in ids)
    assert report.failed == []
    assert report.chain["n"] == 16
    assert report.conjecture_probe is not None
    assert report.conjecture_reason is None


def test_verify_reproducible(flip, quick_options):
    lsi, mlsi, curvature = solved(flip, quick_options)
    first = verify_chain(flip, seed=4, samples=15, lsi=lsi, mlsi=mlsi, curvature=curvature)
    second = verify_chain(flip, seed=4, samples=15, lsi=lsi, mlsi=mlsi, curvature=curvature)
    assert dumps(first) == dumps(second)
    assert first.conjecture_probe is None
    assert "d < 2" in first.conjecture_reason


@pytest.mark.slow
@pytest.mark.parametrize(
    "params",
    [
        dict(family="hypercube", n=3),
        dict(family="cycle", n=6),
        dict(family="rank_one", weights=[1, 2, 3, 4, 5, 6, 7, 8]),
    ],
)
def test_full_battery(params):
    chain = chain_of(**params)
    report = verify_chain(chain, seed=0, samples=200)
    assert [r.check_id for r in report.failed] == []
    assert np.all([r.samples >= 1 for r in report.checks if r.status != Status.skipped])


@pytest.mark.slow
def test_theorems_on_hypercube4():
    chain = chain_of("hypercube", n=4)
    report = verify_chain(chain, Suite.theorems)
    assert report.failed == []
    assert report.conjecture_probe > 0


@pytest.mark.slow
def test_lemmas_on_uniform_rank_one():
    chain = chain_of("rank_one", n=8)
    records = check_lemmas(chain, seed=1, samples=200)
    assert [r.check_id for r in records if r.status == Status.failed] == []


def test_records_keep_both_tolerances(rank_one_16, quick_options):
    records = by_id(check_theorems(rank_one_16, *solved(rank_one_16, quick_options)))
    defaults = Tolerances()
    for check_id in ("T2-lower", "T2-upper", "T3-curvature"):
        assert records[check_id].tolerance == defaults.pointwise_tol
        assert records[check_id].rel_tolerance == defaults.constant_rel_tol
