"""Validated finite reversible Markov chains"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Union
import numpy as np
from scipy.sparse import csgraph
from filab.config import Tolerances
from filab.exceptions import (
    DimensionMismatch,
    NegativeEntry,
    NotIrreducible,
    NotProbability,
    NotReversible,
    RowSumError,
    StationarityError,
)


logger = logging.getLogger(__name__)

_DEFAULT_TOLERANCES = Tolerances()


def _frozen(array: np.ndarray, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """A finite irreducible transition matrix, reversible w.r.t. `pi`.

    Only `validate_chain` should build instances: every field is checked or
    derived there, and arrays are read-only.
    """

    labels: List[str]
    T: np.ndarray
    pi: np.ndarray
    pi_star: float
    d: float
    dist: np.ndarray
    diam: int
    d_offdiag: bool = field(default=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def d_below_two(self) -> bool:
        """The sparsity parameter is below 2, so log d based bounds don't apply"""
        return self.d < 2

    @property
    def edges(self) -> np.ndarray:
        """Boolean mask of allowed transitions T(x,y) > 0"""
        return self.T > 0

    def digest(self) -> str:
        """Hex digest of (T, pi), used to match reports with their chain"""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.T).tobytes())
        h.update(np.ascontiguousarray(self.pi).tobytes())
        return h.hexdigest()[:16]

    def summary(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "diam": self.diam,
            "pi_star": self.pi_star,
            "d_below_two": self.d_below_two,
        }


@dataclass(frozen=True, eq=False)
class Observable:
    """A real function on the state space, indexed like ChainSpec.labels"""

    values: np.ndarray
    positive: bool

    @classmethod
    def of(cls, values: Sequence[float], chain: ChainSpec = None) -> "Observable":
        values = _frozen(np.ravel(values))
        if chain is not None and values.shape[0] != chain.n:
            raise DimensionMismatch(
                f"observable has {values.shape[0]} entries, chain has {chain.n} states"
            )
        return cls(values=values, positive=bool(np.all(values > 0)))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __len__(self):
        return self.values.shape[0]


ArrayLike = Union[np.ndarray, Observable, Sequence[float]]


def as_values(f: ArrayLike, n: int) -> np.ndarray:
    """Coerce an observable to a float vector of length `n`"""
    values = f.values if isinstance(f, Observable) else np.asarray(f, dtype=float)
    if values.ndim != 1 or values.shape[0] != n:
        raise DimensionMismatch(
            f"observable has shape {values.shape}, expected ({n},)"
        )
    return values


def _check_matrix(T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
        raise ValueError(f"transition matrix must be square and non-empty, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("transition matrix holds NaN or Inf entries")
    if np.any(T < 0):
        x, y = np.argwhere(T < 0)[0]
        raise NegativeEntry(f"T({x},{y}) = {T[x, y]!r} is negative")
    return T


def _check_rows(T: np.ndarray, tol_row: float):
    totals = T.sum(axis=1)
    bad = np.flatnonzero(np.abs(totals - 1.0) > tol_row)
    if bad.size:
        raise RowSumError(int(bad[0]), float(totals[bad[0]]))


def _check_probability(pi, n: int) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (n,):
        raise DimensionMismatch(f"pi has shape {pi.shape}, expected ({n},)")
    if not np.all(np.isfinite(pi)) or np.any(pi < 0):
        raise NotProbability("pi must hold finite non-negative entries")
    if abs(pi.sum() - 1.0) > 1e-12 * n:
        raise NotProbability(f"pi sums to {pi.sum()!r}, expected 1")
    return pi


def _hop_distances(T: np.ndarray) -> np.ndarray:
    # breadth-first search on the graph of positive entries
    hops = csgraph.shortest_path((T > 0).astype(float), directed=True, unweighted=True)
    return hops


def is_irreducible(T) -> bool:
    n_components, _ = csgraph.connected_components(
        np.asarray(T) > 0, directed=True, connection="strong"
    )
    return n_components == 1


def stationary_distribution(T) -> np.ndarray:
    """Solve (T^t - I)pi = 0 with the normalization row appended.

    Raises:
        NotIrreducible: the stationary measure isn't unique
    """
    T = _check_matrix(T)
    if not is_irreducible(T):
        raise NotIrreducible("the graph of positive transitions isn't strongly connected")
    n = T.shape[0]
    A = np.vstack([T.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def sparsity_d(chain: ChainSpec, offdiag: bool = None) -> float:
    """max{1/T(x,y): T(x,y) > 0}, over all positive entries unless `offdiag`"""
    if offdiag is None:
        offdiag = chain.d_offdiag
    return _sparsity(chain.T, offdiag)


def _sparsity(T: np.ndarray, offdiag: bool = False) -> float:
    mask = T > 0
    if offdiag:
        mask = mask & ~np.eye(T.shape[0], dtype=bool)
        if not mask.any():
            return 1.0
    return float(1.0 / T[mask].min())


def graph_distance(chain: ChainSpec) -> np.ndarray:
    """dist(x,y) = min{n: T^n(x,y) > 0}, by breadth-first search"""
    return _hop_distances(chain.T).astype(int)


def validate_chain(
    T,
    pi=None,
    labels: List[str] = None,
    tolerances: Tolerances = None,
    d_offdiag: bool = False,
) -> ChainSpec:
    """Validate `T` (and `pi` if given) and derive every ChainSpec field.

    Args:
        T: square matrix of transition probabilities
        pi: stationary probability vector, solved for when None
        labels: state identifiers, "0".."n-1" when None
        tolerances: tol_row and tol_rev are used
        d_offdiag: exclude diagonal entries from d

    Returns:
        ChainSpec: the validated chain

    Raises:
        NegativeEntry: T holds a negative entry
        RowSumError: a row of T deviates from 1 beyond tol_row
        NotIrreducible: the positive-entry graph isn't strongly connected
        NotProbability: pi isn't a fully supported probability vector
        NotReversible: detailed balance fails beyond tol_rev
    """
    tolerances = tolerances or _DEFAULT_TOLERANCES
    T = _check_matrix(T)
    n = T.shape[0]
    _check_rows(T, tolerances.tol_row)
    if not is_irreducible(T):
        raise NotIrreducible("the graph of positive transitions isn't strongly connected")

    if pi is None:
        pi = stationary_distribution(T)
    else:
        pi = _check_probability(pi, n)
    if np.any(pi <= 0):
        raise NotProbability("pi must be fully supported")

    flow = pi[:, None] * T
    gap = np.abs(flow - flow.T).max()
    if gap > tolerances.tol_rev * flow.max():
        x, y = np.unravel_index(np.argmax(np.abs(flow - flow.T)), flow.shape)
        raise NotReversible(
            f"detailed balance fails at ({x},{y}): "
            f"pi(x)T(x,y) = {flow[x, y]!r}, pi(y)T(y,x) = {flow[y, x]!r}"
        )

    if labels is None:
        labels = [str(i) for i in range(n)]
    elif len(labels) != n:
        raise DimensionMismatch(f"{len(labels)} labels for {n} states")

    dist = _hop_distances(T).astype(int)
    chain = ChainSpec(
        labels=list(labels),
        T=_frozen(T),
        pi=_frozen(pi),
        pi_star=float(pi.min()),
        d=_sparsity(T, d_offdiag),
        dist=_frozen(dist, dtype=int),
        diam=int(dist.max()),
        d_offdiag=d_offdiag,
    )
    if chain.d_below_two and n > 1:
        logger.info(f"sparsity parameter d = {chain.d} is below 2")
    return chain


def reversibilize(T, pi, tolerance: float = None) -> np.ndarray:
    """Additive reversibilization (pi(x)T(x,y) + pi(y)T(y,x)) / (2 pi(x)).

    Raises:
        StationarityError: if piT differs from pi beyond `tolerance`
    """
    tolerance = _DEFAULT_TOLERANCES.tol_stationary if tolerance is None else tolerance
    T = _check_matrix(T)
    pi = _check_probability(pi, T.shape[0])
    if np.any(pi <= 0):
        raise NotProbability("pi must be fully supported")
    drift = np.abs(pi @ T - pi).max()
    if drift > tolerance:
        raise StationarityError(f"pi isn't stationary for T: max |piT - pi| = {drift!r}")
    flow = pi[:, None] * T
    return (flow + flow.T) / (2 * pi[:, None])


def reversibilized_sparsity(T, pi=None) -> float:
    """Sparsity parameter of the additive reversibilization of T"""
    T = _check_matrix(T)
    if pi is None:
        pi = stationary_distribution(T)
    return _sparsity(reversibilize(T, pi))
