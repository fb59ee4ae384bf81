"""Report models and their stable JSON serialization"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import numpy as np
from pydantic import BaseModel, Field


SCHEMA_VERSION = "1"
FLOAT_FORMAT = ".17g"


class SolveReport(BaseModel):
    kind: str = Field(..., description="'lsi' for t_LS, 'mlsi' for t_MLS")
    chain_digest: str = Field(..., description="Digest of the chain the report is about")
    value: float = Field(..., description="Certified lower bound of the constant")
    witness: List[float] = Field(
        ...,
        description="g with E[g^2] = 1 (lsi) or f with E[f] = 1 (mlsi) reproducing the ratio",
    )
    residual: float = Field(
        ..., description="Max-norm residual of the extremizer equation at the witness"
    )
    degenerate: Optional[bool] = Field(
        ...,
        description="No non-constant extremizer found (None when restarts are inconclusive)",
    )
    restarts_used: int = Field(..., description="Number of restarts run")
    failed_restarts: int = Field(0, description="Restarts whose ascent broke down")
    ratio_history: List[float] = Field(..., description="Final ratio of each restart")
    floor: float = Field(..., description="Lower bound known without optimization")
    plateau: float = Field(
        ..., description="Limit of the ratio along constant perturbations"
    )
    t_rel: float = Field(..., description="Relaxation time of the chain")
    cross_check: Optional[float] = Field(
        None, description="|t_MLS - t_LS/4| when the LSI report is degenerate"
    )


class CurvatureReport(BaseModel):
    chain_digest: str = Field(..., description="Digest of the chain the report is about")
    kappa_be: float = Field(..., description="Bakry-Emery curvature")
    kappa_ollivier: float = Field(..., description="Ollivier-Ricci contraction rate")
    per_state: List[float] = Field(..., description="Bakry-Emery curvature at each state")
    per_pair: List[List[Optional[float]]] = Field(
        ...,
        description="Ollivier value of each ordered pair, null on the diagonal and on skipped pairs",
    )
    be_state: int = Field(..., description="State attaining kappa_be")
    ollivier_pair: List[int] = Field(..., description="Ordered pair attaining kappa_ollivier")
    be_witness: List[float] = Field(
        ..., description="Function attaining the minimal generalized eigenvalue"
    )
    ollivier_witness: List[float] = Field(
        ..., description="1-Lipschitz function solving the minimizing pair LP"
    )
    edges_only: bool = Field(False, description="Ollivier minimized over edges only")


class Status(str, Enum):
    passed = "pass"
    failed = "fail"
    skipped = "skipped"


class CheckRecord(BaseModel):
    check_id: str = Field(..., description="Stable identifier of the inequality")
    anchor: str = Field(..., description="Statement the check machine-verifies")
    status: Status = Field(..., description="pass, fail or skipped")
    margin: Optional[float] = Field(
        None, description="Worst right-hand side minus left-hand side"
    )
    witness: Optional[Dict[str, Any]] = Field(
        None, description="Inputs attaining the worst margin (values, seed, t)"
    )
    samples: int = Field(0, description="Number of evaluated instances")
    tolerance: float = Field(0.0, description="Allowed negative margin, absolute part")
    rel_tolerance: float = Field(
        0.0, description="Allowed negative margin, relative to |right-hand side|"
    )
    reason: Optional[str] = Field(None, description="Why the check was skipped")


class VerificationReport(BaseModel):
    chain: Dict[str, Any] = Field(..., description="n, d, diam, pi_star of the chain")
    seed: int = Field(..., description="Seed of the random observables")
    samples: int = Field(..., description="Random observables per lemma check")
    checks: List[CheckRecord] = Field(..., description="Records sorted by check id")
    conjecture_probe: Optional[float] = Field(
        None, description="t_LS * kappa_ollivier / log d"
    )
    conjecture_reason: Optional[str] = Field(
        None, description="Why the probe isn't applicable"
    )

    @property
    def failed(self) -> List[CheckRecord]:
        return [c for c in self.checks if c.status == Status.failed]


def _plain(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return _plain(obj.model_dump(mode="python"))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, FLOAT_FORMAT)
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad + item for item in items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{_json_string(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(pad + item for item in items) + "\n" + end + "}"
    raise TypeError(f"can't serialize {type(obj).__name__}")


def _json_string(text: str) -> str:
    return json.dumps(text)


def dumps(obj: Any, indent: int = 2) -> str:
    """Serialize reports with insertion-ordered keys and 17 significant digits per float"""
    return _encode(_plain(obj), indent, 0) + "\n"


def combined_report(
    chain: dict,
    constants: Optional[Dict[str, SolveReport]] = None,
    curvature: Optional[CurvatureReport] = None,
    verification: Optional[VerificationReport] = None,
) -> Dict[str, Any]:
    """The single report schema written by every subcommand"""
    return {
        "schema_version": SCHEMA_VERSION,
        "chain": chain,
        "constants": constants,
        "curvature": curvature,
        "verification": verification,
    }


def write_report(report: Any, path: Union[str, Path, None]) -> str:
    text = dumps(report)
    if path is not None:
        Path(path).write_text(text)
    return text
