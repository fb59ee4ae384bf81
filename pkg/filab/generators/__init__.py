"""Chain families used by the verification battery"""
import logging
from collections import namedtuple
from inspect import isclass
from typing import List, Optional, Tuple
import numpy as np
from pydantic import BaseModel, Field
from filab.chain import ChainSpec, validate_chain
from filab.config import Tolerances
from filab.generators.abstract_family import Family
from filab.generators.basic import BirthDeath, Cycle, Hypercube, Path, RankOne
from filab.generators.product import Product
from filab.generators.random_graph import RandomGraph
from filab.exceptions import ChainError, FamilyNotFound, InvalidParams


logger = logging.getLogger(__name__)


class FamilyParams(BaseModel):
    family: str = Field(..., description="Name of a registered family")
    n: Optional[int] = Field(None, description="Size parameter (states, dimension)")
    p: Optional[float] = Field(None, description="Edge probability of random_graph")
    seed: Optional[int] = Field(None, description="Seed of random_graph")
    weights: Optional[List[float]] = Field(
        None, description="Stationary weights of rank_one, uniform when absent"
    )
    up: Optional[List[float]] = Field(None, description="birth_death rates T(x,x+1)")
    down: Optional[List[float]] = Field(
        None, description="birth_death rates T(x+1,x)"
    )
    children: Optional[List["FamilyParams"]] = Field(
        None, description="The two factors of a product"
    )
    mix: Optional[Tuple[float, float]] = Field(
        None, description="Mixing weights (w1, w2) of a product"
    )


FamilyParams.model_rebuild()

family_def = namedtuple("family_definition", ["constructor", "description"])
# contains definition of every registered family
_FAMILY_DEFS = {
    # "family_x": family_def(constructor=FamilyX, description="...")
}


def register_family(constructor_class, family_name: str = None) -> str:
    """Register a chain family so `make_chain` can build it

    Args:
        constructor_class: class derived from filab.generators.abstract_family.Family
        family_name: name to register the family with. Default is the class name

    Returns:
        str: the name of the family registered

    Raises:
        TypeError: constructor_class is not a subclass of Family
    """
    if not isclass(constructor_class):
        raise TypeError("constructor_class must be class")
    if not issubclass(constructor_class, Family):
        raise TypeError("constructor_class is not a subclass of generators.Family")
    if family_name is None:
        family_name = constructor_class.__name__
    _FAMILY_DEFS[family_name] = family_def(
        constructor=constructor_class,
        description=" ".join((constructor_class.__doc__ or "").split()),
    )
    return family_name


def get_family(family_name: str):
    """Get the constructor of family `family_name`

    Raises:
        FamilyNotFound: if the family isn't registered
    """
    try:
        return _FAMILY_DEFS[family_name].constructor
    except KeyError:
        raise FamilyNotFound(f"Family `{family_name}` isn't registered")


def get_family_def(family_name: str) -> dict:
    """Get descriptive attributes of family `family_name`"""
    get_family(family_name)
    return {
        "family": family_name,
        "description": _FAMILY_DEFS[family_name].description,
    }


def get_all_family_def() -> List[dict]:
    """Get the description of all the registered families"""
    return [get_family_def(name) for name in _FAMILY_DEFS]


def build_family(params: FamilyParams) -> Tuple[List[str], np.ndarray]:
    """Labels and transition matrix of a family member, not validated"""
    constructor = get_family(params.family)
    family = constructor(params)
    return family()


def make_chain(params: FamilyParams, tolerances: Tolerances = None) -> ChainSpec:
    """Build and validate a member of a registered family

    Raises:
        FamilyNotFound: unknown family
        InvalidParams: parameters missing, out of range, or not giving a valid chain
        DisconnectedSample: random_graph exhausted its retry cap
    """
    labels, T = build_family(params)
    try:
        chain = validate_chain(T, labels=labels, tolerances=tolerances)
    except ChainError as e:
        raise InvalidParams(f"{params.family} parameters give an invalid chain: {e}")
    logger.debug(f"built {params.family} chain with {chain.n} states")
    return chain


register_family(RankOne, "rank_one")
register_family(Hypercube, "hypercube")
register_family(Cycle, "cycle")
register_family(Path, "path")
register_family(BirthDeath, "birth_death")
register_family(RandomGraph, "random_graph")
register_family(Product, "product")


__all__ = [
    "Family",
    "FamilyParams",
    "build_family",
    "get_all_family_def",
    "get_family",
    "get_family_def",
    "make_chain",
    "register_family",
]
