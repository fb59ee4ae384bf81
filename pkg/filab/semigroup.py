"""Generator and heat semigroup P_t = exp(tL) of a reversible chain"""

import logging
import math
from dataclasses import dataclass
import numpy as np
from scipy import linalg
from scipy.stats import poisson
from filab.chain import ChainSpec
from filab.chain.core import ArrayLike, as_values
from filab.exceptions import NegativeTime, SpectralError, TrivialChain


logger = logging.getLogger(__name__)

# eigenvalues in (0, CLIP_ABOVE_ZERO] are rounding noise and set to 0
CLIP_ABOVE_ZERO = 1e-12
TOP_EIGENVALUE_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
# Poisson averaging is truncated at mean + POISSON_WIDTH standard deviations
POISSON_WIDTH = 20


def generator_apply(f: ArrayLike, chain: ChainSpec) -> np.ndarray:
    """(Lf)(x) = sum_y T(x,y)(f(y) - f(x)) = (Tf - f)(x)"""
    f = as_values(f, chain.n)
    return chain.T @ f - f


def generator_matrix(chain: ChainSpec) -> np.ndarray:
    return chain.T - np.eye(chain.n)


@dataclass(frozen=True, eq=False)
class SpectralCache:
    """Spectral decomposition of the pi-symmetrized generator D^1/2 (T - I) D^-1/2.

    `eigenvalues` are ascending and <= 0, the last one is 0. Column k of
    `eigenbasis` is orthonormal in l2(pi) (i.e. D^-1/2 times the symmetric eigenvector).
    """

    chain: ChainSpec
    eigenvalues: np.ndarray
    vectors: np.ndarray  # orthonormal eigenvectors of the symmetric matrix
    sqrt_pi: np.ndarray

    @property
    def eigenbasis(self) -> np.ndarray:
        return self.vectors / self.sqrt_pi[:, None]

    @classmethod
    def build(cls, chain: ChainSpec) -> "SpectralCache":
        """Decompose the generator of `chain`

        Raises:
            SpectralError: if the top eigenvalue isn't 0 or L isn't reconstructed
        """
        sqrt_pi = np.sqrt(chain.pi)
        sym = sqrt_pi[:, None] * generator_matrix(chain) / sqrt_pi[None, :]
        sym = 0.5 * (sym + sym.T)
        eigenvalues, vectors = linalg.eigh(sym)
        noise = (eigenvalues > 0) & (eigenvalues <= CLIP_ABOVE_ZERO)
        eigenvalues[noise] = 0.0
        if abs(eigenvalues[-1]) > TOP_EIGENVALUE_TOL:
            raise SpectralError(f"top eigenvalue of L is {eigenvalues[-1]!r}, expected 0")
        if abs(abs(vectors[:, -1] @ sqrt_pi) - 1.0) > 1e-8:
            raise SpectralError("top eigenvector of L isn't constant")

        cache = cls(
            chain=chain,
            eigenvalues=eigenvalues,
            vectors=vectors,
            sqrt_pi=sqrt_pi,
        )
        error = np.abs(cache.reconstruct() - generator_matrix(chain)).max()
        if error > RECONSTRUCTION_TOL:
            raise SpectralError(f"generator reconstruction error {error!r}")
        for array in (eigenvalues, vectors, sqrt_pi):
            array.flags.writeable = False
        return cache

    def reconstruct(self) -> np.ndarray:
        return self.function_of(self.eigenvalues)

    def function_of(self, values: np.ndarray) -> np.ndarray:
        """D^-1/2 U diag(values) U^t D^1/2"""
        return (self.vectors * values) @ self.vectors.T * (
            self.sqrt_pi[None, :] / self.sqrt_pi[:, None]
        )


def _cache_for(chain: ChainSpec, cache: SpectralCache = None) -> SpectralCache:
    if cache is None:
        return SpectralCache.build(chain)
    if cache.chain is not chain:
        raise ValueError("spectral cache belongs to another chain")
    return cache


def heat(
    f: ArrayLike, t: float, chain: ChainSpec, cache: SpectralCache = None
) -> np.ndarray:
    """P_t f = exp(tL) f through the spectral decomposition

    Raises:
        NegativeTime: if t < 0
    """
    f = as_values(f, chain.n)
    if t < 0:
        raise NegativeTime(f"semigroup time must be >= 0, got {t!r}")
    if t == 0:
        return f.copy()
    cache = _cache_for(chain, cache)
    coefficients = cache.vectors.T @ (cache.sqrt_pi * f)
    return cache.vectors @ (np.exp(t * cache.eigenvalues) * coefficients) / cache.sqrt_pi


def heat_matrix(t: float, chain: ChainSpec, cache: SpectralCache = None) -> np.ndarray:
    """Dense P_t, row x being the law at time t started from x"""
    if t < 0:
        raise NegativeTime(f"semigroup time must be >= 0, got {t!r}")
    if t == 0:
        return np.eye(chain.n)
    cache = _cache_for(chain, cache)
    return cache.function_of(np.exp(t * cache.eigenvalues))


def poisson_heat(f: ArrayLike, t: float, chain: ChainSpec) -> np.ndarray:
    """P_t f as the Poisson average sum_n e^-t t^n/n! T^n f"""
    f = as_values(f, chain.n)
    if t < 0:
        raise NegativeTime(f"semigroup time must be >= 0, got {t!r}")
    terms = int(math.ceil(t + POISSON_WIDTH * math.sqrt(t))) + 1
    weights = poisson.pmf(np.arange(terms + 1), t)
    total = np.zeros(chain.n)
    power = f.copy()
    for weight in weights:
        total += weight * power
        power = chain.T @ power
    return total


def spectral_gap(chain: ChainSpec, cache: SpectralCache = None) -> float:
    """lambda_1, where -lambda_1 is the largest non-zero eigenvalue of L

    Raises:
        TrivialChain: if the chain has a single state
    """
    if chain.n < 2:
        raise TrivialChain("the spectral gap needs at least two states")
    cache = _cache_for(chain, cache)
    return float(-cache.eigenvalues[-2])


def relaxation_time(chain: ChainSpec, cache: SpectralCache = None) -> float:
    """t_rel = 1 / spectral gap"""
    return 1.0 / spectral_gap(chain, cache)
