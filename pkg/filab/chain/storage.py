"""Load and save chains in the Chain JSON schema"""

import json
import math
from pathlib import Path
from typing import List, Optional, Union
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from filab.config import Tolerances
from filab.chain.core import ChainSpec, validate_chain
from filab.exceptions import ParseError, SchemaError


class ChainFile(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    labels: List[str] = Field(..., description="State identifiers")
    T: List[List[float]] = Field(..., description="Row-stochastic transition matrix")
    pi: Optional[List[float]] = Field(
        None, description="Stationary measure, solved for when absent"
    )


def _reject_constant(name: str):
    raise ValueError(f"non-finite number '{name}' isn't allowed")


def _finite_float(literal: str) -> float:
    value = float(literal)
    if not math.isfinite(value):
        raise ValueError(f"number '{literal}' overflows to infinity")
    return value


def parse_chain_file(text: str, path: str = "<string>") -> ChainFile:
    """Parse a Chain JSON document without validating the chain itself

    Raises:
        ParseError: malformed JSON, NaN/Inf, or a ragged matrix
        SchemaError: missing or mistyped fields
    """
    try:
        raw = json.loads(
            text, parse_constant=_reject_constant, parse_float=_finite_float
        )
    except ValueError as e:
        raise ParseError(str(e), path=path)
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object", path=path)
    for key in ("labels", "T"):
        if key not in raw:
            raise SchemaError(f"missing field '{key}'", path=path)
    try:
        chain_file = ChainFile(**raw)
    except ValidationError as e:
        raise SchemaError(str(e), path=path)

    n = len(chain_file.T)
    for i, row in enumerate(chain_file.T):
        if len(row) != n:
            raise ParseError(f"ragged matrix: row {i} has {len(row)} entries, expected {n}", path=path)
    if len(chain_file.labels) != n:
        raise SchemaError(f"{len(chain_file.labels)} labels for {n} states", path=path)
    if chain_file.pi is not None and len(chain_file.pi) != n:
        raise SchemaError(f"pi has {len(chain_file.pi)} entries for {n} states", path=path)
    return chain_file


def load_chain(
    path: Union[str, Path], tolerances: Tolerances = None, d_offdiag: bool = False
) -> ChainSpec:
    """Load and validate a chain from a Chain JSON file"""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ParseError(f"can't read file: {e.strerror}", path=str(path))
    chain_file = parse_chain_file(text, path=str(path))
    return validate_chain(
        chain_file.T,
        chain_file.pi,
        labels=chain_file.labels,
        tolerances=tolerances,
        d_offdiag=d_offdiag,
    )


def chain_to_dict(chain: ChainSpec) -> dict:
    return {
        "labels": list(chain.labels),
        "T": chain.T.tolist(),
        "pi": chain.pi.tolist(),
    }


def save_chain(chain: ChainSpec, path: Union[str, Path]):
    """Save a chain into a Chain JSON file"""
    # repr of floats round-trips exactly through json
    Path(path).write_text(json.dumps(chain_to_dict(chain), indent=2) + "\n")
