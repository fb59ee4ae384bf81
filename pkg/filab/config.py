"""Tolerances, solver options and run configuration"""

from enum import Enum
from pathlib import Path
from typing import Optional
from pydantic import BaseModel, Field


class Tolerances(BaseModel):
    tol_row: float = Field(
        1e-12, ge=0, description="Absolute tolerance on the row sums of T"
    )
    tol_rev: float = Field(
        1e-10,
        ge=0,
        description="Detailed balance tolerance, relative to the largest flow pi(x)T(x,y)",
    )
    tol_stationary: float = Field(
        1e-10, ge=0, description="Absolute tolerance on piT = pi"
    )
    residual_tol: float = Field(
        1e-8, gt=0, description="Max-norm tolerance on extremizer equation residuals"
    )
    pointwise_tol: float = Field(
        1e-9, ge=0, description="Absolute tolerance of pointwise inequality checks"
    )
    constant_rel_tol: float = Field(
        1e-6,
        ge=0,
        description="Relative tolerance of checks involving solved constants",
    )
    kernel_tol: float = Field(
        1e-10, ge=0, description="Allowed negativity of Gamma_2 on the kernel of Gamma"
    )
    eig_threshold: float = Field(
        1e-12, ge=0, description="Eigenvalue threshold separating range and kernel"
    )


class SolverOptions(BaseModel):
    restarts: int = Field(64, ge=1, description="Number of multi-start restarts")
    seed: int = Field(0, ge=0, description="Seed of the restart RNG streams")
    workers: int = Field(
        1, ge=0, description="Worker threads for restarts (0 = auto, 1 = serial)"
    )
    max_iter: int = Field(500, ge=1, description="Iterations of each ascent run")
    newton_iter: int = Field(100, ge=0, description="Newton refinement iterations")
    residual_tol: float = Field(
        1e-8, gt=0, description="Tolerance on the extremizer equation residual"
    )
    constant_threshold: float = Field(
        1e-5,
        gt=0,
        description="A stationary point is non-constant only if ||g - 1||_max exceeds this",
    )


class Subcommand(str, Enum):
    analyze = "analyze"
    constants = "constants"
    curvature = "curvature"
    verify = "verify"
    generate = "generate"


class Suite(str, Enum):
    theorems = "theorems"
    lemmas = "lemmas"
    all = "all"


class RunConfig(BaseModel):
    subcommand: Subcommand = Field(..., description="What to run")
    input: Optional[Path] = Field(None, description="Chain JSON file to analyze")
    output: Optional[Path] = Field(
        None, description="Report file to write, stdout if not set"
    )
    restarts: int = Field(64, ge=1, description="Restarts of the constant solvers")
    seed: int = Field(0, ge=0, description="Seed for restarts and random observables")
    samples: int = Field(200, ge=1, description="Random observables per lemma check")
    suite: Suite = Field(Suite.all, description="Which verification suite to run")
    fast_mode: bool = Field(
        False, description="Minimize the Ollivier curvature over edges only"
    )
    d_offdiag: bool = Field(
        False, description="Exclude diagonal entries from the sparsity parameter d"
    )
    workers: int = Field(1, ge=0, description="Worker threads (0 = auto)")
    tolerances: Tolerances = Field(
        default_factory=Tolerances, description="Tolerance overrides"
    )

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            restarts=self.restarts,
            seed=self.seed,
            workers=self.workers,
            residual_tol=self.tolerances.residual_tol,
        )
