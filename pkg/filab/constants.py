"""Log-Sobolev and modified log-Sobolev constants.

Both constants are suprema of a ratio over positive observables:

    t_LS  = sup Ent(f) / E(sqrt f, sqrt f)
    t_MLS = sup Ent(f) / E(f, log f)

They are computed by multi-start ascent in log coordinates followed by Newton
refinement against the stationarity equation of the ratio. The reported value
is always a lower bound of the true constant, and the report carries the
observable reaching it.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Tuple
import numpy as np
from scipy import linalg
from scipy.optimize import minimize
from scipy.special import logsumexp
from filab.chain import ChainSpec
from filab.chain.core import ArrayLike, as_values
from filab.config import SolverOptions
from filab.exceptions import InputMismatch, NoConvergence, NonPositive
from filab.functionals import dirichlet_sum, entropy
from filab.report import SolveReport
from filab.semigroup import SpectralCache, generator_matrix, relaxation_time
from filab.utils import derive_rng, parallel_map


logger = logging.getLogger(__name__)

LSI = "lsi"
MLSI = "mlsi"

# box constraint on the log coordinates of the ascent
LOG_BOUND = 40.0
EIGEN_STEP = 0.1
INDICATOR_FLOOR = 0.05
GAUSSIAN_SCALES = (0.1, 1.0, 3.0)
# size of the perturbation along the second eigenfunction in degenerate reports
DEGENERATE_STEP = 1e-4
MAX_HALVINGS = 40
# Newton stops once the residual is this fraction of residual_tol
NEWTON_TARGET = 1e-3


def _check_positive(f: np.ndarray, what: str):
    if np.any(f <= 0):
        raise NonPositive(f"{what} needs a strictly positive observable")


def lsi_ratio(f: ArrayLike, chain: ChainSpec) -> float:
    """Ent(f) / E(sqrt f, sqrt f) for f >= 0, nan when f is constant"""
    f = as_values(f, chain.n)
    root = np.sqrt(np.clip(f, 0.0, None))
    energy = dirichlet_sum(root, root, chain)
    if energy <= 0:
        return math.nan
    return entropy(f, chain) / energy


def mlsi_ratio(f: ArrayLike, chain: ChainSpec) -> float:
    """Ent(f) / E(f, log f) for f > 0, nan when f is constant

    Raises:
        NonPositive: if f <= 0 somewhere
    """
    f = as_values(f, chain.n)
    _check_positive(f, "the modified log-Sobolev ratio")
    energy = dirichlet_sum(f, np.log(f), chain)
    if energy <= 0:
        return math.nan
    return entropy(f, chain) / energy


def extremizer_residual(g: ArrayLike, t: float, chain: ChainSpec) -> float:
    """||t Lg + 2 g log g||_max after normalizing E[g^2] = 1

    Raises:
        NonPositive: if g <= 0 somewhere
    """
    g = as_values(g, chain.n)
    _check_positive(g, "the extremizer equation")
    g = g / math.sqrt(chain.pi @ (g * g))
    L = generator_matrix(chain)
    return float(np.abs(t * (L @ g) + 2 * g * np.log(g)).max())


def mlsi_extremizer_residual(f: ArrayLike, t: float, chain: ChainSpec) -> float:
    """||log f + t (L log f + Lf / f)||_max after normalizing E[f] = 1

    Raises:
        NonPositive: if f <= 0 somewhere
    """
    f = as_values(f, chain.n)
    _check_positive(f, "the extremizer equation")
    f = f / (chain.pi @ f)
    L = generator_matrix(chain)
    log_f = np.log(f)
    return float(np.abs(log_f + t * (L @ log_f + (L @ f) / f)).max())


def dirac_bound(chain: ChainSpec) -> Tuple[float, int]:
    """max_x log(1/pi(x)) / (1 - T(x,x)), the LSI ratio at Dirac masses

    Returns:
        (value, x): the bound and the state attaining it
    """
    values = np.log(1.0 / chain.pi) / (1.0 - np.diag(chain.T))
    x = int(np.argmax(values))
    return float(values[x]), x


class _Ratio(ABC):
    """One of the two ratios, seen as a function of log coordinates h"""

    kind: str

    def __init__(self, chain: ChainSpec, t_rel: float):
        self.chain = chain
        self.pi = chain.pi
        self.L = generator_matrix(chain)
        self.flow = chain.pi[:, None] * chain.T
        self.t_rel = t_rel

    def _energy(self, a: np.ndarray, b: np.ndarray) -> float:
        da = a[None, :] - a[:, None]
        db = b[None, :] - b[:, None]
        return float(0.5 * np.sum(self.flow * da * db))

    @property
    @abstractmethod
    def plateau(self) -> float:
        """Limit of the ratio along perturbations of constants"""

    @property
    def floor(self) -> float:
        return self.plateau

    def floor_witness(self) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} has no floor above its plateau")

    @abstractmethod
    def normalize(self, h: np.ndarray) -> np.ndarray:
        """Shift h so that exp(h) meets the normalization"""

    @abstractmethod
    def value_and_grad(self, h: np.ndarray) -> Tuple[float, np.ndarray]:
        pass

    @abstractmethod
    def residual(self, x: np.ndarray, t: float) -> float:
        pass

    @abstractmethod
    def newton_system(self, x: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Residual and Jacobian of the stationarity system in (x, t)"""

    @abstractmethod
    def renormalize(self, x: np.ndarray) -> np.ndarray:
        pass

    def observable(self, h: np.ndarray) -> np.ndarray:
        return np.exp(self.normalize(h))

    def ratio(self, h: np.ndarray) -> float:
        return self.value_and_grad(h)[0]

    def negative(self, h: np.ndarray) -> Tuple[float, np.ndarray]:
        value, grad = self.value_and_grad(h)
        return -value, -grad


class _LogSobolev(_Ratio):
    """Ent(g^2) / E(g, g) with g = exp(h), E[g^2] = 1"""

    kind = LSI

    def __init__(self, chain: ChainSpec, t_rel: float):
        super().__init__(chain, t_rel)
        self.dirac, self.dirac_state = dirac_bound(chain)

    @property
    def plateau(self) -> float:
        return 2 * self.t_rel

    @property
    def floor(self) -> float:
        return max(self.plateau, self.dirac)

    def floor_witness(self) -> np.ndarray:
        """Near-Dirac g at the state of the Dirac bound, its ratio matches the bound"""
        h = np.full(self.chain.n, -LOG_BOUND)
        h[self.dirac_state] = 0.0
        return self.observable(h)

    def normalize(self, h):
        return h - 0.5 * logsumexp(2 * h, b=self.pi)

    def value_and_grad(self, h):
        h = self.normalize(h)
        g = np.exp(h)
        delta = np.expm1(2 * h)
        # E[g^2 log g^2] - E[g^2 - 1], exact since E[g^2] = 1
        ent = max(float(self.pi @ ((1 + delta) * 2 * h - delta)), 0.0)
        energy = self._energy(g, g)
        if energy <= 0:
            return 0.0, np.zeros_like(h)
        value = ent / energy
        grad = 2 * self.pi * g * (2 * h * g + value * (self.L @ g)) / energy
        return value, grad

    def residual(self, g, t):
        return float(np.abs(t * (self.L @ g) + 2 * g * np.log(g)).max())

    def newton_system(self, g, t):
        Lg = self.L @ g
        log_g = np.log(g)
        r = np.append(t * Lg + 2 * g * log_g, self.pi @ (g * g) - 1.0)
        n = g.shape[0]
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = t * self.L + np.diag(2 * log_g + 2)
        J[:n, n] = Lg
        J[n, :n] = 2 * self.pi * g
        return r, J

    def renormalize(self, g):
        return g / math.sqrt(self.pi @ (g * g))


class _ModifiedLogSobolev(_Ratio):
    """Ent(f) / E(f, log f) with f = exp(h), E[f] = 1"""

    kind = MLSI

    @property
    def plateau(self) -> float:
        return 0.5 * self.t_rel

    def normalize(self, h):
        return h - logsumexp(h, b=self.pi)

    def value_and_grad(self, h):
        h = self.normalize(h)
        f = np.exp(h)
        ent = max(float(self.pi @ (f * h - np.expm1(h))), 0.0)
        energy = self._energy(f, h)
        if energy <= 0:
            return 0.0, np.zeros_like(h)
        value = ent / energy
        grad = self.pi * (f * h + value * (f * (self.L @ h) + self.L @ f)) / energy
        return value, grad

    def _stationarity(self, f, t):
        log_f = np.log(f)
        drift = self.L @ log_f + (self.L @ f) / f
        return log_f + t * drift, drift

    def residual(self, f, t):
        value, _ = self._stationarity(f, t)
        return float(np.abs(value).max())

    def newton_system(self, f, t):
        value, drift = self._stationarity(f, t)
        r = np.append(value, self.pi @ f - 1.0)
        n = f.shape[0]
        inv = 1.0 / f
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = np.diag(inv) + t * (
            self.L * inv[None, :]
            + inv[:, None] * self.L
            - np.diag((self.L @ f) * inv * inv)
        )
        J[:n, n] = drift
        J[n, :n] = self.pi
        return r, J

    def renormalize(self, f):
        return f / (self.pi @ f)


@dataclass
class _Outcome:
    index: int
    ratio: float
    witness: np.ndarray
    residual: float
    collapsed: bool
    failed: bool


def _refine(
    problem: _Ratio, x: np.ndarray, t: float, options: SolverOptions
) -> Tuple[np.ndarray, float]:
    """Damped Newton on the stationarity system, keeping x > 0"""
    n = x.shape[0]
    r, J = problem.newton_system(x, t)
    norm = np.abs(r).max()
    for _ in range(options.newton_iter):
        if norm <= NEWTON_TARGET * options.residual_tol:
            break
        try:
            step, *_ = linalg.lstsq(J, -r)
        except (linalg.LinAlgError, ValueError):
            logger.debug("Newton step failed, keeping the ascent point")
            break
        alpha = 1.0
        for _ in range(MAX_HALVINGS):
            x_new = x + alpha * step[:n]
            t_new = t + alpha * step[n]
            if np.all(x_new > 0):
                r_new, J_new = problem.newton_system(x_new, t_new)
                if np.abs(r_new).max() < norm:
                    break
            alpha /= 2
        else:
            break
        x, t, r, J = x_new, t_new, r_new, J_new
        norm = np.abs(r).max()
    return problem.renormalize(x), t


def _run_restart(
    problem: _Ratio, index: int, h0: np.ndarray, options: SolverOptions
) -> _Outcome:
    n = h0.shape[0]
    start = np.clip(h0 - h0.mean(), -LOG_BOUND, LOG_BOUND)
    try:
        result = minimize(
            problem.negative,
            start,
            jac=True,
            method="L-BFGS-B",
            bounds=[(-LOG_BOUND, LOG_BOUND)] * n,
            options={"maxiter": options.max_iter, "ftol": 1e-15, "gtol": 1e-12},
        )
    except (ValueError, FloatingPointError, linalg.LinAlgError) as e:
        logger.warning(f"{problem.kind} restart {index} broke down: {e}")
        return _Outcome(index, math.nan, np.ones(n), math.inf, False, True)

    h = problem.normalize(result.x)
    x = np.exp(h)
    if np.abs(x - 1).max() <= options.constant_threshold:
        logger.debug(f"{problem.kind} restart {index} collapsed to a constant")
        return _Outcome(index, problem.plateau, x, math.nan, True, False)

    ratio = problem.ratio(h)
    refined, _ = _refine(problem, x, ratio, options)
    if np.abs(refined - 1).max() > options.constant_threshold:
        refined_ratio = problem.ratio(np.log(refined))
        if refined_ratio >= ratio - 1e-9 * max(1.0, abs(ratio)):
            x, ratio = refined, refined_ratio
    residual = problem.residual(x, ratio)
    failed = not np.isfinite(ratio) or (
        not result.success and residual > options.residual_tol
    )
    logger.debug(
        f"{problem.kind} restart {index}: ratio {ratio!r}, residual {residual!r}"
    )
    return _Outcome(index, ratio, x, residual, False, failed)


def _starting_points(cache: SpectralCache, options: SolverOptions) -> List[np.ndarray]:
    n = cache.chain.n
    phi = cache.eigenbasis[:, -2]
    phi = phi / np.abs(phi).max()
    starts = [EIGEN_STEP * phi, -EIGEN_STEP * phi]
    starts += [np.log(row + INDICATOR_FLOOR) for row in np.eye(n)]
    k = 0
    while len(starts) < options.restarts:
        rng = derive_rng(options.seed, len(starts))
        scale = GAUSSIAN_SCALES[k % len(GAUSSIAN_SCALES)]
        starts.append(scale * rng.standard_normal(n))
        k += 1
    return starts[: options.restarts]


def _perturbation(problem: _Ratio, cache: SpectralCache) -> np.ndarray:
    phi = cache.eigenbasis[:, -2]
    return problem.observable(DEGENERATE_STEP * phi / np.abs(phi).max())


def _solve(
    problem: _Ratio, cache: SpectralCache, options: SolverOptions
) -> SolveReport:
    starts = _starting_points(cache, options)
    outcomes = parallel_map(
        lambda item: _run_restart(problem, item[0], item[1], options),
        list(enumerate(starts)),
        workers=options.workers,
    )
    tol = options.residual_tol * max(1.0, problem.plateau)
    live = [o for o in outcomes if not (o.collapsed or o.failed)]
    best = max(live, key=lambda o: (o.ratio, -o.index), default=None)

    if best is not None and best.ratio > problem.plateau + tol:
        value, witness, residual = best.ratio, best.witness, best.residual
        degenerate = False if residual <= options.residual_tol else None
        if problem.floor > value + tol:
            logger.warning(
                f"{problem.kind}: best restart {value!r} is below the floor {problem.floor!r}"
            )
            value, degenerate = problem.floor, None
            witness = problem.floor_witness()
            residual = problem.residual(witness, value)
    else:
        witness = _perturbation(problem, cache)
        value = problem.plateau
        residual = problem.residual(witness, value)
        degenerate = True
        if problem.floor > problem.plateau + tol:
            value, degenerate = problem.floor, None
            witness = problem.floor_witness()
            residual = problem.residual(witness, value)

    report = SolveReport(
        kind=problem.kind,
        chain_digest=cache.chain.digest(),
        value=value,
        witness=witness.tolist(),
        residual=residual,
        degenerate=degenerate,
        restarts_used=len(outcomes),
        failed_restarts=sum(o.failed for o in outcomes),
        ratio_history=[o.ratio for o in outcomes],
        floor=problem.floor,
        plateau=problem.plateau,
        t_rel=problem.t_rel,
    )
    if report.failed_restarts == len(outcomes):
        report.degenerate = None
        raise NoConvergence(
            f"all {len(outcomes)} {problem.kind} restarts failed", report=report
        )
    logger.info(
        f"{problem.kind}: value {value!r}, degenerate {degenerate}, "
        f"{report.failed_restarts} failed restarts"
    )
    return report


def solve_tls(
    chain: ChainSpec, options: SolverOptions = None, cache: SpectralCache = None
) -> SolveReport:
    """Lower bound of the log-Sobolev constant with its witness g (E[g^2] = 1)

    Raises:
        TrivialChain: if the chain has a single state
        NoConvergence: if every restart broke down
    """
    options = options or SolverOptions()
    cache = cache or SpectralCache.build(chain)
    problem = _LogSobolev(chain, relaxation_time(chain, cache))
    return _solve(problem, cache, options)


def solve_tmls(
    chain: ChainSpec,
    options: SolverOptions = None,
    cache: SpectralCache = None,
    lsi_report: SolveReport = None,
) -> SolveReport:
    """Lower bound of the modified log-Sobolev constant with its witness f (E[f] = 1)

    When a degenerate `lsi_report` is given, `cross_check` holds |t_MLS - t_LS/4|.

    Raises:
        TrivialChain: if the chain has a single state
        NoConvergence: if every restart broke down
        InputMismatch: if `lsi_report` was computed on another chain
    """
    options = options or SolverOptions()
    cache = cache or SpectralCache.build(chain)
    if lsi_report is not None and lsi_report.chain_digest != chain.digest():
        raise InputMismatch("the log-Sobolev report belongs to another chain")
    problem = _ModifiedLogSobolev(chain, relaxation_time(chain, cache))
    report = _solve(problem, cache, options)
    if lsi_report is not None and lsi_report.degenerate:
        report.cross_check = abs(report.value - lsi_report.value / 4)
        if report.cross_check > options.residual_tol * max(1.0, report.value):
            logger.warning(
                f"degenerate log-Sobolev report but t_MLS differs from t_LS/4 by {report.cross_check!r}"
            )
    return report
