"""Machine checks of the functional inequalities relating t_LS, t_MLS and curvature.

Each check produces one CheckRecord. Checks quantifying over observables are
evaluated on random strictly positive f whose log-values are uniform on
[-3, 3], drawn from the stream derive_rng(seed, sample). A record fails when
some instance has lhs > rhs + abs_tol + rel_tol |rhs|, and then carries the
instance reaching the worst margin.
"""

import logging
import math
from typing import Callable, List, Optional, Tuple
import numpy as np
from filab.chain import ChainSpec
from filab.config import SolverOptions, Suite, Tolerances
from filab.constants import lsi_ratio, solve_tls, solve_tmls
from filab.curvature import curvature_report, kantorovich_dual, wasserstein1
from filab.exceptions import InputMismatch, NotApplicable
from filab.functionals import (
    dirichlet,
    dirichlet_identity,
    entropy,
    expectation,
    gamma,
    lipschitz,
    log_lipschitz,
    phi_cost,
)
from filab.report import (
    CheckRecord,
    CurvatureReport,
    SolveReport,
    Status,
    VerificationReport,
)
from filab.semigroup import SpectralCache, heat_matrix
from filab.utils import derive_rng, parallel_map


logger = logging.getLogger(__name__)

_DEFAULT_TOLERANCES = Tolerances()

TIMES = (0.05, 0.2, 1.0, 5.0)
SMALL_TIMES = (1e-4, 1e-3, 1e-2)
LOG_RANGE = 3.0
HERBST_SAMPLES = 50
# curvature increment at which the tightness checks expect a violation
TIGHTNESS_STEP = 0.05
# relative rounding allowance of pointwise checks
POINTWISE_REL = 1e-12

D_BELOW_TWO = "sparsity parameter d < 2, log d based bounds don't apply"


class _Worst:
    """Smallest slack rhs - lhs + allowance over the instances of one check"""

    def __init__(self, check_id: str, anchor: str, abs_tol: float, rel_tol: float):
        self.check_id = check_id
        self.anchor = anchor
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.samples = 0
        self.slack = math.inf
        self.margin = None
        self.witness = None

    def update(self, lhs, rhs, witness: Callable[[], dict]):
        """Add instances; lhs and rhs may be arrays, compared entrywise"""
        lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        margin = rhs - lhs
        slack = margin + self.abs_tol + self.rel_tol * np.abs(rhs)
        k = int(np.argmin(slack))
        self.samples += 1
        if slack[k] < self.slack:
            self.slack = float(slack[k])
            self.margin = float(margin[k])
            self.witness = witness()
            if lhs.shape[0] > 1:
                self.witness["state"] = k

    def record(self) -> CheckRecord:
        if self.samples == 0:
            return _skipped(self.check_id, self.anchor, "no instance evaluated")
        status = Status.passed if self.slack >= 0 else Status.failed
        return CheckRecord(
            check_id=self.check_id,
            anchor=self.anchor,
            status=status,
            margin=self.margin,
            witness=self.witness if status == Status.failed else None,
            samples=self.samples,
            tolerance=self.abs_tol,
            rel_tolerance=self.rel_tol,
        )


def _skipped(check_id: str, anchor: str, reason: str) -> CheckRecord:
    return CheckRecord(
        check_id=check_id, anchor=anchor, status=Status.skipped, reason=reason
    )


def _single(
    check_id: str,
    anchor: str,
    lhs: float,
    rhs: float,
    tolerances: Tolerances,
    witness: dict = None,
) -> CheckRecord:
    worst = _Worst(check_id, anchor, tolerances.pointwise_tol, tolerances.constant_rel_tol)
    worst.update(lhs, rhs, lambda: dict(witness or {}, lhs=lhs, rhs=rhs))
    return worst.record()


def _check_same_chain(chain: ChainSpec, *reports):
    digest = chain.digest()
    for report in reports:
        if report is not None and report.chain_digest != digest:
            raise InputMismatch("reports were computed on another chain")


def check_theorems(
    chain: ChainSpec,
    lsi: SolveReport,
    mlsi: SolveReport,
    curvature: CurvatureReport,
    tolerances: Tolerances = None,
) -> List[CheckRecord]:
    """Records of the regularity, equivalence and curvature theorems

    Raises:
        InputMismatch: if a report was computed on another chain
    """
    tolerances = tolerances or _DEFAULT_TOLERANCES
    _check_same_chain(chain, lsi, mlsi, curvature)
    log_d = math.log(chain.d)
    records = []

    anchor = "Lip(log f) <= 14 log d when f achieves equality in the log-Sobolev inequality"
    if chain.d_below_two:
        records.append(_skipped("T1-regularity", anchor, D_BELOW_TWO))
    elif lsi.degenerate is not False:
        reason = (
            "no non-constant extremizer found"
            if lsi.degenerate
            else "restarts inconclusive, extremizer not certified"
        )
        records.append(_skipped("T1-regularity", anchor, reason))
    else:
        g = np.asarray(lsi.witness)
        lip, pair = log_lipschitz(g * g, chain)
        records.append(
            _single(
                "T1-regularity",
                anchor,
                lip,
                14 * log_d,
                tolerances,
                {"values": (g * g).tolist(), "pair": list(pair), "residual": lsi.residual},
            )
        )

    # both values are lower bounds: the mlsi witness seen through the lsi ratio
    # is also a lower bound of t_LS, and is at least 4 t_MLS
    f = np.asarray(mlsi.witness)
    t_ls = lsi.value
    if mlsi.degenerate is False:
        reevaluated = lsi_ratio(f, chain)
        if np.isfinite(reevaluated):
            t_ls = max(t_ls, reevaluated)
    records.append(
        _single(
            "T2-lower",
            "4 t_MLS <= t_LS",
            4 * mlsi.value,
            t_ls,
            tolerances,
            {"t_ls": lsi.value, "t_mls": mlsi.value, "values": f.tolist()},
        )
    )

    anchor = "t_LS <= 15 t_MLS log d"
    if chain.d_below_two:
        records.append(_skipped("T2-upper", anchor, D_BELOW_TWO))
    else:
        records.append(
            _single(
                "T2-upper",
                anchor,
                lsi.value,
                15 * mlsi.value * log_d,
                tolerances,
                {"t_ls": lsi.value, "t_mls": mlsi.value, "d": chain.d},
            )
        )

    anchor = "t_LS <= 33 log d / kappa when the Bakry-Emery curvature kappa is positive"
    if chain.d_below_two:
        records.append(_skipped("T3-curvature", anchor, D_BELOW_TWO))
    elif curvature.kappa_be <= 0:
        records.append(_skipped("T3-curvature", anchor, "kappa <= 0"))
    else:
        records.append(
            _single(
                "T3-curvature",
                anchor,
                lsi.value,
                33 * log_d / curvature.kappa_be,
                tolerances,
                {"t_ls": lsi.value, "kappa": curvature.kappa_be, "d": chain.d},
            )
        )
    return records


class _LemmaContext:
    """State shared by the lemma checks, with semigroup matrices precomputed"""

    def __init__(
        self,
        chain: ChainSpec,
        seed: int,
        samples: int,
        lsi: SolveReport,
        mlsi: SolveReport,
        curvature: CurvatureReport,
        tolerances: Tolerances,
        cache: SpectralCache,
    ):
        self.chain = chain
        self.seed = seed
        self.samples = samples
        self.lsi = lsi
        self.mlsi = mlsi
        self.curvature = curvature
        self.tol = tolerances
        self.cache = cache
        self.log_d = math.log(chain.d)
        self.heat = {t: heat_matrix(t, chain, cache) for t in TIMES + SMALL_TIMES}

    def observables(self):
        """(sample, log-values h, f = exp(h), real g) for every sample"""
        for sample in range(self.samples):
            rng = derive_rng(self.seed, sample)
            h = rng.uniform(-LOG_RANGE, LOG_RANGE, self.chain.n)
            g = rng.standard_normal(self.chain.n)
            yield sample, h, np.exp(h), g

    def witness(self, sample: int, h: np.ndarray, **extra) -> Callable[[], dict]:
        def build():
            record = {"seed": self.seed, "sample": sample, "log_values": h.tolist()}
            for key, value in extra.items():
                record[key] = value.tolist() if isinstance(value, np.ndarray) else value
            return record

        return build

    def pointwise(self, check_id: str, anchor: str) -> _Worst:
        return _Worst(check_id, anchor, self.tol.pointwise_tol, POINTWISE_REL)

    def scalar(self, check_id: str, anchor: str) -> _Worst:
        return _Worst(check_id, anchor, self.tol.pointwise_tol, self.tol.constant_rel_tol)


def _diameter(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    return _single(
        "La-diameter",
        "diam <= sqrt(2) t_LS",
        chain.diam,
        math.sqrt(2) * ctx.lsi.value,
        ctx.tol,
        {"diam": chain.diam, "t_ls": ctx.lsi.value},
    )


def _semigroup_regularity(ctx: _LemmaContext) -> CheckRecord:
    worst = ctx.scalar(
        "Lb-semigroup-regularity", "Lip(log P_t f) <= Lip(log f) + log d"
    )
    for sample, h, f, _ in ctx.observables():
        lip_f, _ = lipschitz(h, ctx.chain)
        for t in TIMES:
            lip_t, _ = log_lipschitz(ctx.heat[t] @ f, ctx.chain)
            worst.update(lip_t, lip_f + ctx.log_d, ctx.witness(sample, h, t=t))
    return worst.record()


def _dirichlet_upper(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    worst = ctx.scalar(
        "Lc-dirichlet-upper", "E(f^2, g) <= 2 sqrt(E(f, f) E[f^2 Gamma(g)])"
    )
    for sample, h, f, g in ctx.observables():
        for other, kind in ((g, "random"), (f * f, "f^2")):
            lhs = dirichlet(f * f, other, chain)
            rhs = 2 * math.sqrt(
                dirichlet(f, f, chain) * expectation(f * f * gamma(other, other, chain), chain)
            )
            worst.update(lhs, rhs, ctx.witness(sample, h, g=other, g_kind=kind))
    return worst.record()


def _approximate_chain_rule(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    worst = ctx.scalar(
        "Ld-approx-chain-rule", "E[f Gamma(log f)] <= (1 + Lip(log f)) E(f, log f)"
    )
    for sample, h, f, _ in ctx.observables():
        lhs = expectation(f * gamma(h, h, chain), chain)
        lip, _ = lipschitz(h, chain)
        worst.update(lhs, (1 + lip) * dirichlet(f, h, chain), ctx.witness(sample, h))
    return worst.record()


def _pointwise_chain_rule(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    worst = ctx.pointwise(
        "Le-pointwise-chain-rule", "Gamma(f, log f) <= phi(Lip(log f)) Gamma(sqrt f)"
    )
    for sample, h, f, _ in ctx.observables():
        lip, _ = lipschitz(h, chain)
        root = np.sqrt(f)
        worst.update(
            gamma(f, h, chain),
            phi_cost(lip) * gamma(root, root, chain),
            ctx.witness(sample, h),
        )
    return worst.record()


def _subcommutation(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    kappa = ctx.curvature.kappa_be
    worst = ctx.pointwise(
        "Lf-subcommutation", "Gamma(P_t f) <= exp(-2 kappa t) P_t Gamma(f)"
    )
    for sample, h, _, _ in ctx.observables():
        energy = gamma(h, h, chain)
        for t in TIMES:
            moved = ctx.heat[t] @ h
            worst.update(
                gamma(moved, moved, chain),
                math.exp(-2 * kappa * t) * (ctx.heat[t] @ energy),
                ctx.witness(sample, h, t=t, kappa=kappa),
            )
    return worst.record()


def _contraction(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    kappa = ctx.curvature.kappa_ollivier
    worst = ctx.pointwise("Lg-contraction", "Lip(P_t f) <= exp(-kappa t) Lip(f)")
    for sample, h, _, _ in ctx.observables():
        lip, _ = lipschitz(h, chain)
        for t in TIMES:
            lip_t, _ = lipschitz(ctx.heat[t] @ h, chain)
            worst.update(
                lip_t, math.exp(-kappa * t) * lip, ctx.witness(sample, h, t=t, kappa=kappa)
            )
    return worst.record()


def lipschitz_sample(chain: ChainSpec, rng: np.random.Generator) -> np.ndarray:
    """A random mean-zero f, 1-Lipschitz for the graph distance.

    f = min_o (a_o + dist(o, .)) with random offsets a_o in [0, diam], then centred.
    """
    offsets = rng.uniform(0.0, max(chain.diam, 1), chain.n)
    f = np.min(offsets[:, None] + chain.dist, axis=0)
    return f - expectation(f, chain)


def _herbst(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    t_mls = ctx.mlsi.value
    worst = ctx.scalar(
        "Lh-herbst", "P(f >= s) <= exp(-s^2 / (2 t_MLS)) for 1-Lipschitz f with E[f] = 0"
    )
    for sample in range(HERBST_SAMPLES):
        f = lipschitz_sample(chain, derive_rng(ctx.seed, ctx.samples + sample))
        thresholds = np.unique(f[f > 0])
        for s in thresholds:
            tail = float(chain.pi[f >= s].sum())
            worst.update(
                tail,
                math.exp(-s * s / (2 * t_mls)),
                lambda: {
                    "seed": ctx.seed,
                    "sample": ctx.samples + sample,
                    "values": f.tolist(),
                    "threshold": float(s),
                },
            )
    return worst.record()


def _dirac(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    return _single(
        "Li-dirac",
        "log(1/pi_*) <= t_LS",
        math.log(1.0 / chain.pi_star),
        ctx.lsi.value,
        ctx.tol,
        {"pi_star": chain.pi_star, "t_ls": ctx.lsi.value},
    )


def _dirichlet_identity(ctx: _LemmaContext) -> CheckRecord:
    worst = ctx.pointwise("Lj-dirichlet-identity", "E(f^2, g) = 2 E[f Gamma(f, g)]")
    for sample, h, f, g in ctx.observables():
        lhs, rhs = dirichlet_identity(f, g, ctx.chain)
        scale = max(abs(lhs), abs(rhs), 1.0)
        # both directions, relative to the size of the terms
        worst.update(
            abs(lhs - rhs) / scale, 0.0, ctx.witness(sample, h, g=g, lhs=lhs, rhs=rhs)
        )
    return worst.record()


def _entropy_curvature(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    kappa = ctx.curvature.kappa_be
    anchor = "Ent(f) <= (2 / kappa)(1 + log d + Lip(log f)) E(sqrt f, sqrt f)"
    if kappa <= 0:
        return _skipped("Lk-entropy-curvature", anchor, "kappa <= 0")
    worst = ctx.scalar("Lk-entropy-curvature", anchor)
    for sample, h, f, _ in ctx.observables():
        lip, _ = lipschitz(h, chain)
        root = np.sqrt(f)
        worst.update(
            entropy(f, chain),
            2 / kappa * (1 + ctx.log_d + lip) * dirichlet(root, root, chain),
            ctx.witness(sample, h, kappa=kappa),
        )
    return worst.record()


def _diameter_mlsi(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    bound = 2 * math.sqrt(2 * ctx.mlsi.value * math.log(1.0 / chain.pi_star))
    return _single(
        "Ll-diameter-mlsi",
        "diam <= 2 sqrt(2 t_MLS log(1/pi_*))",
        chain.diam,
        bound,
        ctx.tol,
        {"diam": chain.diam, "t_mls": ctx.mlsi.value, "pi_star": chain.pi_star},
    )


def _spectral(ctx: _LemmaContext) -> CheckRecord:
    kappa = ctx.curvature.kappa_be
    anchor = "t_rel <= 1 / kappa when kappa > 0"
    if kappa <= 0:
        return _skipped("Lm-spectral", anchor, "kappa <= 0")
    t_rel = ctx.lsi.t_rel
    return _single(
        "Lm-spectral", anchor, t_rel, 1 / kappa, ctx.tol, {"t_rel": t_rel, "kappa": kappa}
    )


def _wasserstein_contraction(ctx: _LemmaContext) -> CheckRecord:
    """At the pair minimizing the Ollivier curvature, W1 contracts at rate
    kappa and the transport problem has no duality gap
    """
    chain = ctx.chain
    kappa = ctx.curvature.kappa_ollivier
    x, y = ctx.curvature.ollivier_pair
    worst = ctx.pointwise(
        "Ln-wasserstein-contraction",
        "W1(P_t(x,.), P_t(y,.)) <= exp(-kappa t) dist(x,y) with zero duality gap",
    )
    f = np.asarray(ctx.curvature.ollivier_witness)
    lip, _ = lipschitz(f, chain)
    worst.update(lip, 1.0, lambda: {"pair": [x, y], "values": f.tolist()})
    for t in TIMES:
        mu = np.clip(ctx.heat[t][x], 0.0, None)
        nu = np.clip(ctx.heat[t][y], 0.0, None)
        mu, nu = mu / mu.sum(), nu / nu.sum()
        primal = wasserstein1(mu, nu, chain.dist)
        dual, _ = kantorovich_dual(mu, nu, chain.dist)
        def witness():
            return {"pair": [x, y], "t": t, "primal": primal, "dual": dual}

        worst.update(primal, math.exp(-kappa * t) * chain.dist[x, y], witness)
        worst.update(abs(primal - dual), 1e-8, witness)
    return worst.record()


def _subcommutation_tightness(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    kappa = ctx.curvature.kappa_be + TIGHTNESS_STEP
    x = ctx.curvature.be_state
    f = np.asarray(ctx.curvature.be_witness)
    energy = gamma(f, f, chain)
    violations = []
    for t in SMALL_TIMES:
        moved = ctx.heat[t] @ f
        lhs = gamma(moved, moved, chain)[x]
        rhs = math.exp(-2 * kappa * t) * (ctx.heat[t] @ energy)[x]
        violations.append(lhs - rhs)
    return _tightness(
        "Tf-subcommutation-tight",
        "Gamma(P_t f) <= exp(-2 (kappa + 0.05) t) P_t Gamma(f) fails at the witness",
        violations,
        {"state": x, "values": f.tolist(), "kappa": kappa},
    )


def _contraction_tightness(ctx: _LemmaContext) -> CheckRecord:
    chain = ctx.chain
    kappa = ctx.curvature.kappa_ollivier + TIGHTNESS_STEP
    f = np.asarray(ctx.curvature.ollivier_witness)
    lip, _ = lipschitz(f, chain)
    violations = []
    for t in SMALL_TIMES:
        lip_t, _ = lipschitz(ctx.heat[t] @ f, chain)
        violations.append(lip_t - math.exp(-kappa * t) * lip)
    return _tightness(
        "Tg-contraction-tight",
        "Lip(P_t f) <= exp(-(kappa + 0.05) t) Lip(f) fails at the witness",
        violations,
        {"pair": ctx.curvature.ollivier_pair, "values": f.tolist(), "kappa": kappa},
    )


def _tightness(check_id: str, anchor: str, violations: List[float], witness: dict):
    k = int(np.argmax(violations))
    violated = violations[k] > 0
    return CheckRecord(
        check_id=check_id,
        anchor=anchor,
        status=Status.passed if violated else Status.failed,
        margin=float(violations[k]),
        witness=None if violated else dict(witness, t=list(SMALL_TIMES)),
        samples=len(violations),
        tolerance=0.0,
    )


LEMMA_CHECKS = (
    _diameter,
    _semigroup_regularity,
    _dirichlet_upper,
    _approximate_chain_rule,
    _pointwise_chain_rule,
    _subcommutation,
    _contraction,
    _herbst,
    _dirac,
    _dirichlet_identity,
    _entropy_curvature,
    _diameter_mlsi,
    _spectral,
    _wasserstein_contraction,
    _subcommutation_tightness,
    _contraction_tightness,
)


def _solved_inputs(
    chain: ChainSpec,
    seed: int,
    lsi: Optional[SolveReport],
    mlsi: Optional[SolveReport],
    curvature: Optional[CurvatureReport],
    tolerances: Tolerances,
    workers: int,
    cache: SpectralCache,
) -> Tuple[SolveReport, SolveReport, CurvatureReport]:
    options = SolverOptions(
        seed=seed, workers=workers, residual_tol=tolerances.residual_tol
    )
    if lsi is None:
        logger.info("solving t_LS for the verification")
        lsi = solve_tls(chain, options, cache)
    if mlsi is None:
        logger.info("solving t_MLS for the verification")
        mlsi = solve_tmls(chain, options, cache, lsi_report=lsi)
    if curvature is None:
        curvature = curvature_report(chain, tolerances, workers=workers)
    return lsi, mlsi, curvature


def check_lemmas(
    chain: ChainSpec,
    seed: int = 0,
    samples: int = 200,
    lsi: SolveReport = None,
    mlsi: SolveReport = None,
    curvature: CurvatureReport = None,
    tolerances: Tolerances = None,
    workers: int = 1,
) -> List[CheckRecord]:
    """Records of every lemma-level inequality.

    Constants and curvature are solved when not given. Failures are records,
    never exceptions.

    Raises:
        ValueError: if samples < 1
        InputMismatch: if a report was computed on another chain
    """
    if samples < 1:
        raise ValueError("lemma checks need at least one sample")
    tolerances = tolerances or _DEFAULT_TOLERANCES
    _check_same_chain(chain, lsi, mlsi, curvature)
    cache = SpectralCache.build(chain)
    lsi, mlsi, curvature = _solved_inputs(
        chain, seed, lsi, mlsi, curvature, tolerances, workers, cache
    )
    ctx = _LemmaContext(chain, seed, samples, lsi, mlsi, curvature, tolerances, cache)
    return parallel_map(lambda check: check(ctx), LEMMA_CHECKS, workers)


def conjecture_probe(
    chain: ChainSpec, lsi: SolveReport, curvature: CurvatureReport
) -> float:
    """t_LS kappa_ollivier / log d, the constant the chain needs in
    t_LS <= c log d / kappa_ollivier

    Raises:
        NotApplicable: if kappa_ollivier <= 0 or d < 2
        InputMismatch: if a report was computed on another chain
    """
    _check_same_chain(chain, lsi, curvature)
    if chain.d_below_two:
        raise NotApplicable(D_BELOW_TWO)
    if curvature.kappa_ollivier <= 0:
        raise NotApplicable("Ollivier curvature isn't positive")
    return lsi.value * curvature.kappa_ollivier / math.log(chain.d)


def verify_chain(
    chain: ChainSpec,
    suite: Suite = Suite.all,
    seed: int = 0,
    samples: int = 200,
    lsi: SolveReport = None,
    mlsi: SolveReport = None,
    curvature: CurvatureReport = None,
    tolerances: Tolerances = None,
    workers: int = 1,
) -> VerificationReport:
    """Run a verification suite and assemble its report, records sorted by id"""
    tolerances = tolerances or _DEFAULT_TOLERANCES
    _check_same_chain(chain, lsi, mlsi, curvature)
    cache = SpectralCache.build(chain)
    lsi, mlsi, curvature = _solved_inputs(
        chain, seed, lsi, mlsi, curvature, tolerances, workers, cache
    )
    records = []
    if suite in (Suite.theorems, Suite.all):
        records += check_theorems(chain, lsi, mlsi, curvature, tolerances)
    if suite in (Suite.lemmas, Suite.all):
        records += check_lemmas(
            chain, seed, samples, lsi, mlsi, curvature, tolerances, workers
        )
    records.sort(key=lambda r: r.check_id)

    probe, reason = None, None
    try:
        probe = conjecture_probe(chain, lsi, curvature)
    except NotApplicable as e:
        reason = str(e)

    report = VerificationReport(
        chain=chain.summary(),
        seed=seed,
        samples=samples,
        checks=records,
        conjecture_probe=probe,
        conjecture_reason=reason,
    )
    for record in report.failed:
        logger.warning(f"check {record.check_id} failed with margin {record.margin!r}")
    return report
