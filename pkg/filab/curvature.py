"""Bakry-Emery and Ollivier-Ricci curvature, Wasserstein-1 distance"""

import logging
from typing import Dict, Tuple
import numpy as np
import ot
from scipy import linalg
from scipy.optimize import linprog
from filab.chain import ChainSpec
from filab.config import Tolerances
from filab.exceptions import (
    DimensionMismatch,
    KernelViolation,
    LPInfeasible,
    NotProbability,
    TrivialChain,
)
from filab.functionals import gamma, gamma2
from filab.report import CurvatureReport
from filab.semigroup import generator_matrix
from filab.utils import parallel_map


logger = logging.getLogger(__name__)

_DEFAULT_TOLERANCES = Tolerances()
# accepted deviation of a measure's total mass from 1
MASS_TOL = 1e-9


def _require_states(chain: ChainSpec, what: str):
    if chain.n < 2:
        raise TrivialChain(f"{what} needs at least two states")


def _polarized(form, n: int) -> np.ndarray:
    """Matrices M[x] with form(f)(x) = f^t M[x] f, from a quadratic form
    evaluated on basis vectors and their pairwise sums
    """
    basis = np.eye(n)
    diagonal = [form(basis[i]) for i in range(n)]
    M = np.zeros((n, n, n))
    for i in range(n):
        M[:, i, i] = diagonal[i]
        for j in range(i + 1, n):
            value = 0.5 * (form(basis[i] + basis[j]) - diagonal[i] - diagonal[j])
            M[:, i, j] = M[:, j, i] = value
    return M


def curvature_forms(chain: ChainSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Per-state quadratic forms A[x] of Gamma_2(f)(x) and B[x] of Gamma(f)(x)"""
    A = _polarized(lambda f: gamma2(f, chain), chain.n)
    B = _polarized(lambda f: gamma(f, f, chain), chain.n)
    return A, B


def state_curvature(
    A: np.ndarray, B: np.ndarray, tolerances: Tolerances = None
) -> Tuple[float, np.ndarray]:
    """Largest kappa with A - kappa B positive semidefinite.

    B is singular: it is split into its range and kernel, the kernel block of A
    is eliminated through its Schur complement and the remaining pencil is
    solved on range(B).

    Returns:
        (kappa, f): the curvature and a function attaining it

    Raises:
        KernelViolation: A has a negative direction inside the kernel of B
    """
    tolerances = tolerances or _DEFAULT_TOLERANCES
    weights, V = linalg.eigh(B)
    in_range = weights > tolerances.eig_threshold
    Vr, Vk = V[:, in_range], V[:, ~in_range]
    A_rr = Vr.T @ A @ Vr
    coupling = np.zeros((Vr.shape[1], 0))
    if Vk.shape[1]:
        A_kk = Vk.T @ A @ Vk
        lowest = linalg.eigvalsh(A_kk)[0]
        if lowest < -tolerances.kernel_tol:
            raise KernelViolation(
                f"Gamma_2 has eigenvalue {lowest!r} on the kernel of Gamma"
            )
        A_kr = Vk.T @ A @ Vr
        # v = coupling.T @ z minimizes the form over the kernel part
        coupling = -(linalg.pinvh(A_kk, atol=tolerances.eig_threshold) @ A_kr).T
        A_rr = A_rr + A_kr.T @ coupling.T
    scale = 1.0 / np.sqrt(weights[in_range])
    pencil = scale[:, None] * A_rr * scale[None, :]
    values, vectors = linalg.eigh(0.5 * (pencil + pencil.T))
    z = scale * vectors[:, 0]
    f = Vr @ z
    if Vk.shape[1]:
        f = f + Vk @ (coupling.T @ z)
    return float(values[0]), f


def bakry_emery_kappa(
    chain: ChainSpec, tolerances: Tolerances = None, workers: int = 1
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Bakry-Emery curvature, the best constant in Gamma_2 >= kappa Gamma

    Returns:
        (kappa, per_state, witnesses): the global curvature, kappa_x for
            every state and, on row x, a function attaining kappa_x

    Raises:
        TrivialChain: if the chain has a single state
        KernelViolation: if Gamma_2 is negative on the kernel of Gamma somewhere
    """
    _require_states(chain, "Bakry-Emery curvature")
    A, B = curvature_forms(chain)
    results = parallel_map(
        lambda x: state_curvature(A[x], B[x], tolerances), range(chain.n), workers
    )
    per_state = np.array([kappa for kappa, _ in results])
    witnesses = np.array([f for _, f in results])
    return float(per_state.min()), per_state, witnesses


def ollivier_pair(chain: ChainSpec, x: int, y: int) -> Tuple[float, np.ndarray]:
    """min (Lf(y) - Lf(x)) / dist(x,y) over 1-Lipschitz f with f(x) - f(y) = dist(x,y)

    Returns:
        (value, f): the pair curvature and the minimizing f, with f(y) = 0

    Raises:
        LPInfeasible: the linear program has no solution
    """
    if x == y:
        raise ValueError("Ollivier curvature needs two distinct states")
    n = chain.n
    L = generator_matrix(chain)
    distance = float(chain.dist[x, y])
    c = (L[y] - L[x]) / distance

    rows = []
    for u, v in np.argwhere(np.triu(chain.edges | chain.edges.T, k=1)):
        row = np.zeros(n)
        row[u], row[v] = 1.0, -1.0
        rows += [row, -row]
    A_eq = np.zeros((2, n))
    A_eq[0, x], A_eq[0, y] = 1.0, -1.0
    A_eq[1, y] = 1.0
    result = linprog(
        c,
        A_ub=np.array(rows),
        b_ub=np.ones(len(rows)),
        A_eq=A_eq,
        b_eq=np.array([distance, 0.0]),
        bounds=(None, None),
        method="highs",
    )
    if result.status != 0:
        raise LPInfeasible(f"pair ({x},{y}): {result.message}")
    f = result.x
    return float(c @ f), f


def ollivier_kappa(
    chain: ChainSpec, edges_only: bool = False, workers: int = 1
) -> Tuple[float, np.ndarray, Dict[Tuple[int, int], np.ndarray]]:
    """Ollivier-Ricci curvature, the rate of Lip(P_t f) <= e^{-kappa t} Lip(f)

    Args:
        chain: the chain
        edges_only: minimize over pairs with T(x,y) > 0 only
        workers: worker threads for the pair linear programs

    Returns:
        (kappa, per_pair, witnesses): the curvature, an n x n matrix of pair
            values (nan on the diagonal and on skipped pairs) and the
            minimizing function of each solved pair

    Raises:
        TrivialChain: if the chain has a single state
    """
    _require_states(chain, "Ollivier curvature")
    n = chain.n
    pairs = [
        (x, y)
        for x in range(n)
        for y in range(n)
        if x != y and (not edges_only or chain.T[x, y] > 0)
    ]
    results = parallel_map(lambda p: ollivier_pair(chain, *p), pairs, workers)
    per_pair = np.full((n, n), np.nan)
    witnesses = {}
    for (x, y), (value, f) in zip(pairs, results):
        per_pair[x, y] = value
        witnesses[(x, y)] = f
    return float(np.nanmin(per_pair)), per_pair, witnesses


def _check_measure(mu, n: int = None) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or (n is not None and mu.shape[0] != n):
        raise DimensionMismatch(f"measure has shape {mu.shape}, expected ({n},)")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise NotProbability("measure must hold finite non-negative entries")
    if abs(mu.sum() - 1.0) > MASS_TOL:
        raise NotProbability(f"measure sums to {mu.sum()!r}, expected 1")
    return mu / mu.sum()


def _check_transport(mu, nu, dist) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    dist = np.ascontiguousarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise DimensionMismatch(f"distance matrix must be square, got {dist.shape}")
    if not np.all(np.isfinite(dist)) or np.any(dist < 0):
        raise ValueError("distances must be finite and non-negative")
    n = dist.shape[0]
    return _check_measure(mu, n), _check_measure(nu, n), dist


def transport_plan(mu, nu, dist) -> np.ndarray:
    """Optimal coupling of mu and nu for the cost `dist`

    Raises:
        NotProbability: mu or nu isn't a probability vector
    """
    mu, nu, dist = _check_transport(mu, nu, dist)
    return ot.emd(mu, nu, dist)


def wasserstein1(mu, nu, dist) -> float:
    """min over couplings of sum gamma(x,y) dist(x,y), by network simplex

    Raises:
        NotProbability: mu or nu isn't a probability vector
    """
    mu, nu, dist = _check_transport(mu, nu, dist)
    return float(ot.emd2(mu, nu, dist))


def kantorovich_dual(mu, nu, dist) -> Tuple[float, np.ndarray]:
    """max sum f (mu - nu) over f with f(u) - f(v) <= dist(u,v)

    Returns:
        (value, f): the dual value and a maximizing f with f(0) = 0

    Raises:
        NotProbability: mu or nu isn't a probability vector
        LPInfeasible: the linear program has no solution
    """
    mu, nu, dist = _check_transport(mu, nu, dist)
    n = dist.shape[0]
    rows, bounds = [], []
    for u in range(n):
        for v in range(n):
            if u != v:
                row = np.zeros(n)
                row[u], row[v] = 1.0, -1.0
                rows.append(row)
                bounds.append(dist[u, v])
    A_eq = np.zeros((1, n))
    A_eq[0, 0] = 1.0
    result = linprog(
        -(mu - nu),
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(bounds) if rows else None,
        A_eq=A_eq,
        b_eq=np.zeros(1),
        bounds=(None, None),
        method="highs",
    )
    if result.status != 0:
        raise LPInfeasible(f"Kantorovich dual: {result.message}")
    return float(-result.fun), result.x


def curvature_report(
    chain: ChainSpec,
    tolerances: Tolerances = None,
    edges_only: bool = False,
    workers: int = 1,
) -> CurvatureReport:
    """Both curvatures of `chain` with their breakdowns and witnesses"""
    kappa_be, per_state, be_witnesses = bakry_emery_kappa(chain, tolerances, workers)
    kappa_oll, per_pair, oll_witnesses = ollivier_kappa(chain, edges_only, workers)
    state = int(np.argmin(per_state))
    pair = min(oll_witnesses, key=lambda p: (per_pair[p], p))
    logger.info(
        f"Bakry-Emery curvature {kappa_be!r} at state {state}, "
        f"Ollivier curvature {kappa_oll!r} at pair {pair}"
    )
    return CurvatureReport(
        chain_digest=chain.digest(),
        kappa_be=kappa_be,
        kappa_ollivier=kappa_oll,
        per_state=per_state.tolist(),
        per_pair=[
            [None if np.isnan(v) else float(v) for v in row] for row in per_pair
        ],
        be_state=state,
        ollivier_pair=list(pair),
        be_witness=be_witnesses[state].tolist(),
        ollivier_witness=oll_witnesses[pair].tolist(),
        edges_only=edges_only,
    )
