"""Finite reversible Markov chains: validation, distances, storage"""

from filab.chain.core import (
    ChainSpec,
    Observable,
    as_values,
    graph_distance,
    is_irreducible,
    reversibilize,
    reversibilized_sparsity,
    sparsity_d,
    stationary_distribution,
    validate_chain,
)
from filab.chain.storage import load_chain, save_chain


__all__ = [
    "ChainSpec",
    "Observable",
    "as_values",
    "graph_distance",
    "is_irreducible",
    "load_chain",
    "reversibilize",
    "reversibilized_sparsity",
    "save_chain",
    "sparsity_d",
    "stationary_distribution",
    "validate_chain",
]
