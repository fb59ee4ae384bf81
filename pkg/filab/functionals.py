"""Expectation, entropy, carre du champ, Dirichlet form, Lipschitz constants and the cost phi"""

import math
from typing import Tuple
import numpy as np
from scipy.special import xlogy
from filab.chain import ChainSpec
from filab.chain.core import ArrayLike, as_values
from filab.exceptions import NegativeArgument, NegativeValue, NonPositive
from filab.semigroup import generator_apply


# below this r, phi uses its Taylor expansion at 0
PHI_SERIES_CUTOFF = 1e-6


def expectation(f: ArrayLike, chain: ChainSpec) -> float:
    """E[f] = sum_x pi(x) f(x)"""
    return float(chain.pi @ as_values(f, chain.n))


def entropy(f: ArrayLike, chain: ChainSpec) -> float:
    """Ent(f) = E[f log f] - E[f] log E[f], with 0 log 0 = 0

    Raises:
        NegativeValue: if f < 0 somewhere
    """
    f = as_values(f, chain.n)
    if np.any(f < 0):
        raise NegativeValue("entropy needs a non-negative observable")
    mean = chain.pi @ f
    value = chain.pi @ xlogy(f, f) - xlogy(mean, mean)
    # Jensen: only rounding can make it negative
    return float(max(value, 0.0))


def _differences(f: np.ndarray) -> np.ndarray:
    # entry (x, y) is f(y) - f(x)
    return f[None, :] - f[:, None]


def gamma(f: ArrayLike, g: ArrayLike, chain: ChainSpec) -> np.ndarray:
    """Gamma(f,g)(x) = 1/2 sum_y T(x,y)(f(y)-f(x))(g(y)-g(x))"""
    f, g = as_values(f, chain.n), as_values(g, chain.n)
    return 0.5 * np.sum(chain.T * _differences(f) * _differences(g), axis=1)


def gamma2(f: ArrayLike, chain: ChainSpec) -> np.ndarray:
    """Gamma_2(f) = 1/2 L(Gamma(f,f)) - Gamma(f, Lf)"""
    f = as_values(f, chain.n)
    return 0.5 * generator_apply(gamma(f, f, chain), chain) - gamma(
        f, generator_apply(f, chain), chain
    )


def dirichlet(f: ArrayLike, g: ArrayLike, chain: ChainSpec) -> float:
    """E(f,g) = E[Gamma(f,g)]"""
    return float(chain.pi @ gamma(f, g, chain))


def dirichlet_sum(f: ArrayLike, g: ArrayLike, chain: ChainSpec) -> float:
    """E(f,g) as 1/2 sum_{x,y} pi(x)T(x,y)(f(x)-f(y))(g(x)-g(y))"""
    f, g = as_values(f, chain.n), as_values(g, chain.n)
    flow = chain.pi[:, None] * chain.T
    return float(0.5 * np.sum(flow * _differences(f) * _differences(g)))


def dirichlet_identity(f: ArrayLike, g: ArrayLike, chain: ChainSpec) -> Tuple[float, float]:
    """Both sides of E(f^2, g) = 2 E[f Gamma(f,g)], which holds under reversibility"""
    f = as_values(f, chain.n)
    return dirichlet(f * f, g, chain), float(2 * chain.pi @ (f * gamma(f, g, chain)))


def lipschitz(f: ArrayLike, chain: ChainSpec) -> Tuple[float, Tuple[int, int]]:
    """Lip(f) = max{|f(x)-f(y)|: T(x,y) > 0}

    Returns:
        (value, (x, y)): the constant and the lexicographically smallest maximizing pair
    """
    f = as_values(f, chain.n)
    spread = np.where(chain.T > 0, np.abs(_differences(f)), -np.inf)
    x, y = np.unravel_index(np.argmax(spread), spread.shape)
    return float(spread[x, y]), (int(x), int(y))


def log_lipschitz(f: ArrayLike, chain: ChainSpec) -> Tuple[float, Tuple[int, int]]:
    """Lip(log f) for a strictly positive f

    Raises:
        NonPositive: if f <= 0 somewhere
    """
    f = as_values(f, chain.n)
    if np.any(f <= 0):
        raise NonPositive("log-Lipschitz constant needs a strictly positive observable")
    return lipschitz(np.log(f), chain)


def phi_cost(r: float) -> float:
    """phi(r) = r (e^{r/2} + 1) / (e^{r/2} - 1), extended by phi(0) = 4

    Raises:
        NegativeArgument: if r < 0
    """
    r = float(r)
    if r < 0:
        raise NegativeArgument(f"phi is defined on [0, inf), got {r!r}")
    if r == math.inf:
        return math.inf
    u = r / 2
    if r < PHI_SERIES_CUTOFF:
        # r / (e^u - 1) = 2 (1 - u/2 + u^2/12 + O(u^4))
        return (math.expm1(u) + 2) * 2 * (1 - u / 2 + u * u / 12)
    return r * (math.expm1(u) + 2) / math.expm1(u)
