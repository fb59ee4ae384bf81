"""Deterministic families: rank-one, hypercube, cycle, path and birth-death chains"""

from itertools import product
from typing import List, Tuple
import numpy as np
from filab.generators.abstract_family import Family
from filab.exceptions import InvalidParams


def _require_n(params, minimum: int) -> int:
    if params.n is None:
        raise InvalidParams(f"family '{params.family}' needs n")
    if params.n < minimum:
        raise InvalidParams(f"family '{params.family}' needs n >= {minimum}, got {params.n}")
    return params.n


class RankOne(Family):
    """Rank-one chain T(x,y) = pi(y): every step resamples from pi.
    `weights` gives pi (normalized), uniform on n states when absent.
    """

    def check_params(self):
        weights = self.params.weights
        if weights is None:
            _require_n(self.params, 1)
            return
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0 or np.any(weights <= 0):
            raise InvalidParams("rank_one weights must be positive")
        if self.params.n is not None and self.params.n != weights.size:
            raise InvalidParams(f"{weights.size} weights for n = {self.params.n}")

    def build(self) -> Tuple[List[str], np.ndarray]:
        if self.params.weights is None:
            pi = np.full(self.params.n, 1.0 / self.params.n)
        else:
            pi = np.asarray(self.params.weights, dtype=float)
            pi = pi / pi.sum()
        T = np.tile(pi, (pi.size, 1))
        return [str(x) for x in range(pi.size)], T


class Hypercube(Family):
    """Simple random walk on {0,1}^n, flipping one uniformly chosen coordinate"""

    def check_params(self):
        _require_n(self.params, 1)

    def build(self) -> Tuple[List[str], np.ndarray]:
        n = self.params.n
        size = 2 ** n
        T = np.zeros((size, size))
        for x in range(size):
            for k in range(n):
                T[x, x ^ (1 << k)] = 1.0 / n
        labels = ["".join(bits) for bits in product("01", repeat=n)]
        # product() enumerates with the first coordinate most significant
        return labels, T


class Cycle(Family):
    """Simple random walk on the n-cycle; n = 2 is the two-point flip"""

    def check_params(self):
        _require_n(self.params, 2)

    def build(self) -> Tuple[List[str], np.ndarray]:
        n = self.params.n
        T = np.zeros((n, n))
        for x in range(n):
            T[x, (x + 1) % n] += 0.5
            T[x, (x - 1) % n] += 0.5
        return [str(x) for x in range(n)], T


class Path(Family):
    """Simple random walk on the n-path, endpoints hold with the missing half"""

    def check_params(self):
        _require_n(self.params, 2)

    def build(self) -> Tuple[List[str], np.ndarray]:
        n = self.params.n
        T = np.zeros((n, n))
        for x in range(n):
            if x > 0:
                T[x, x - 1] = 0.5
            if x < n - 1:
                T[x, x + 1] = 0.5
            T[x, x] = 1.0 - T[x].sum()
        return [str(x) for x in range(n)], T


class BirthDeath(Family):
    """Birth-death chain with T(x,x+1) = up[x], T(x+1,x) = down[x],
    the diagonal absorbing the remaining mass.
    """

    def check_params(self):
        n = _require_n(self.params, 2)
        up, down = self.params.up, self.params.down
        if up is None or down is None:
            raise InvalidParams("birth_death needs up and down rates")
        if len(up) != n - 1 or len(down) != n - 1:
            raise InvalidParams(f"birth_death on {n} states needs {n - 1} up and down rates")
        up, down = np.asarray(up, dtype=float), np.asarray(down, dtype=float)
        if np.any(up <= 0) or np.any(down <= 0):
            raise InvalidParams("birth_death rates must be positive")
        outflow = np.zeros(n)
        outflow[:-1] += up
        outflow[1:] += down
        if np.any(outflow > 1.0 + 1e-12):
            x = int(np.argmax(outflow))
            raise InvalidParams(f"rates leaving state {x} sum to {outflow[x]!r} > 1")

    def build(self) -> Tuple[List[str], np.ndarray]:
        n = self.params.n
        T = np.zeros((n, n))
        for x in range(n - 1):
            T[x, x + 1] = self.params.up[x]
            T[x + 1, x] = self.params.down[x]
        T[np.diag_indices(n)] = np.clip(1.0 - T.sum(axis=1), 0.0, None)
        return [str(x) for x in range(n)], T
