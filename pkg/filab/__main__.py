"""CLI for using filab"""

import json
import logging
from pathlib import Path
from typing import List, Optional
import typer
from pydantic import ValidationError
from filab.chain import ChainSpec, load_chain
from filab.chain.storage import chain_to_dict
from filab.config import RunConfig, Subcommand, Suite, Tolerances
from filab.constants import solve_tls, solve_tmls
from filab.curvature import curvature_report
from filab.exceptions import (
    ChainError,
    GeneratorError,
    InputError,
    SolverError,
    ValueDomainError,
)
from filab.generators import FamilyParams, get_all_family_def, make_chain
from filab.report import combined_report, write_report
from filab.semigroup import SpectralCache
from filab.utils import THREADS_ENV, worker_count
from filab.verify import verify_chain


logger = logging.getLogger(__name__)

VERBOSE = 0

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

app = typer.Typer()


def log(msg, verbosity=1):
    if verbosity <= VERBOSE:
        typer.echo(msg, err=True)


def parse_floats(value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter("expected comma separated numbers (e.g. '0.5,0.25')")


def chain_section(chain: ChainSpec) -> dict:
    section = {"labels": list(chain.labels)}
    section.update(chain.summary())
    section["digest"] = chain.digest()
    return section


def _load(config: RunConfig) -> ChainSpec:
    try:
        return load_chain(config.input, config.tolerances, d_offdiag=config.d_offdiag)
    except (ChainError, ValueError) as e:
        raise InputError(f"{type(e).__name__}: {e}", path=str(config.input))


def run(config: RunConfig, params: FamilyParams = None) -> int:
    """Run a subcommand and write its report

    Returns:
        int: the exit code, 1 when a verification check failed

    Raises:
        InputError: the input file can't be used
        GeneratorError: `params` don't describe a valid chain
        SolverError: a solver broke down
    """
    if config.subcommand == Subcommand.generate:
        chain = make_chain(params, config.tolerances)
        text = json.dumps(chain_to_dict(chain), indent=2) + "\n"
        if config.output is None:
            typer.echo(text, nl=False)
        else:
            config.output.write_text(text)
            log(f"saved {params.family} chain with {chain.n} states to {config.output}")
        return EXIT_OK

    chain = _load(config)
    log(f"loaded chain with {chain.n} states, d = {chain.d}, diam = {chain.diam}")
    options = config.solver_options()
    cache = SpectralCache.build(chain)
    constants = curvature = verification = None
    lsi = mlsi = None

    if config.subcommand in (Subcommand.analyze, Subcommand.constants, Subcommand.verify):
        lsi = solve_tls(chain, options, cache)
        log(f"t_LS = {lsi.value} (degenerate: {lsi.degenerate})")
        mlsi = solve_tmls(chain, options, cache, lsi_report=lsi)
        log(f"t_MLS = {mlsi.value} (degenerate: {mlsi.degenerate})")
        if config.subcommand != Subcommand.verify:
            constants = {"t_ls": lsi, "t_mls": mlsi}

    if config.subcommand != Subcommand.constants:
        curvature = curvature_report(
            chain, config.tolerances, edges_only=config.fast_mode, workers=config.workers
        )
        log(f"kappa = {curvature.kappa_be}, kappa_ollivier = {curvature.kappa_ollivier}")

    exit_code = EXIT_OK
    if config.subcommand in (Subcommand.analyze, Subcommand.verify):
        verification = verify_chain(
            chain,
            suite=config.suite,
            seed=config.seed,
            samples=config.samples,
            lsi=lsi,
            mlsi=mlsi,
            curvature=curvature,
            tolerances=config.tolerances,
            workers=config.workers,
        )
        for record in verification.failed:
            typer.echo(
                f"check {record.check_id} failed: {record.anchor} (margin {record.margin})",
                err=True,
            )
            exit_code = EXIT_CHECK_FAILED
        if config.subcommand == Subcommand.verify:
            curvature = None

    report = combined_report(chain_section(chain), constants, curvature, verification)
    text = write_report(report, config.output)
    if config.output is None:
        typer.echo(text, nl=False)
    else:
        log(f"report saved to {config.output}")
    return exit_code


def execute(config: RunConfig, params: FamilyParams = None):
    """Run `config`, turning library errors into messages and exit codes"""
    logger.debug(f"running {config.subcommand.value}")
    try:
        code = run(config, params)
    except (InputError, GeneratorError, ValueDomainError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_INPUT_ERROR)
    except ChainError as e:
        source = f"{config.input}: " if config.input else ""
        typer.echo(f"Error: {source}{type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=EXIT_INPUT_ERROR)
    except SolverError as e:
        typer.echo(f"Solver error: {e}", err=True)
        raise typer.Exit(code=EXIT_CHECK_FAILED)
    raise typer.Exit(code=code)


def tolerances_from(
    tol_row: Optional[float], tol_rev: Optional[float], residual_tol: Optional[float]
) -> Tolerances:
    overrides = {"tol_row": tol_row, "tol_rev": tol_rev, "residual_tol": residual_tol}
    return Tolerances(**{k: v for k, v in overrides.items() if v is not None})


INPUT_ARGUMENT = typer.Argument(..., help="chain JSON file")
OUTPUT_OPTION = typer.Option(
    None, "--out", "-o", help="file to write the report to, stdout if not set"
)
RESTARTS_OPTION = typer.Option(64, "--restarts", min=1, help="restarts of the constant solvers")
SEED_OPTION = typer.Option(0, "--seed", min=0, help="seed of the restarts and random observables")
SAMPLES_OPTION = typer.Option(200, "--samples", min=1, help="random observables per lemma check")
SUITE_OPTION = typer.Option(Suite.all, "--suite", help="verification suite to run")
FAST_OPTION = typer.Option(
    False, "--fast", help="minimize the Ollivier curvature over edges only"
)
D_OFFDIAG_OPTION = typer.Option(
    False, "--d-offdiag", help="exclude diagonal entries from the sparsity parameter d"
)
THREADS_OPTION = typer.Option(
    None, "--threads", envvar=THREADS_ENV, min=0, help="worker threads (0 = one per CPU)"
)
TOL_ROW_OPTION = typer.Option(None, "--tol-row", min=0, help="row sum tolerance [1e-12]")
TOL_REV_OPTION = typer.Option(
    None, "--tol-rev", min=0, help="relative detailed balance tolerance [1e-10]"
)
RESIDUAL_TOL_OPTION = typer.Option(
    None, "--residual-tol", min=0, help="extremizer equation tolerance [1e-8]"
)


def _config(subcommand: Subcommand, **kwargs) -> RunConfig:
    threads = kwargs.pop("threads", None)
    try:
        tolerances = tolerances_from(
            kwargs.pop("tol_row", None),
            kwargs.pop("tol_rev", None),
            kwargs.pop("residual_tol", None),
        )
        return RunConfig(
            subcommand=subcommand,
            workers=worker_count(threads),
            tolerances=tolerances,
            **kwargs,
        )
    except (ValidationError, ValueError) as e:
        typer.echo(f"Invalid configuration: {e}", err=True)
        raise typer.Exit(code=EXIT_INPUT_ERROR)


@app.command()
def analyze(
    input_file: Path = INPUT_ARGUMENT,
    output_file: Path = OUTPUT_OPTION,
    restarts: int = RESTARTS_OPTION,
    seed: int = SEED_OPTION,
    samples: int = SAMPLES_OPTION,
    suite: Suite = SUITE_OPTION,
    fast_mode: bool = FAST_OPTION,
    d_offdiag: bool = D_OFFDIAG_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    tol_row: Optional[float] = TOL_ROW_OPTION,
    tol_rev: Optional[float] = TOL_REV_OPTION,
    residual_tol: Optional[float] = RESIDUAL_TOL_OPTION,
):
    """Validate a chain, solve its constants and curvatures, and verify every inequality"""
    config = _config(
        Subcommand.analyze,
        input=input_file,
        output=output_file,
        restarts=restarts,
        seed=seed,
        samples=samples,
        suite=suite,
        fast_mode=fast_mode,
        d_offdiag=d_offdiag,
        threads=threads,
        tol_row=tol_row,
        tol_rev=tol_rev,
        residual_tol=residual_tol,
    )
    execute(config)


@app.command()
def constants(
    input_file: Path = INPUT_ARGUMENT,
    output_file: Path = OUTPUT_OPTION,
    restarts: int = RESTARTS_OPTION,
    seed: int = SEED_OPTION,
    d_offdiag: bool = D_OFFDIAG_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    tol_row: Optional[float] = TOL_ROW_OPTION,
    tol_rev: Optional[float] = TOL_REV_OPTION,
    residual_tol: Optional[float] = RESIDUAL_TOL_OPTION,
):
    """Solve the log-Sobolev and modified log-Sobolev constants"""
    config = _config(
        Subcommand.constants,
        input=input_file,
        output=output_file,
        restarts=restarts,
        seed=seed,
        d_offdiag=d_offdiag,
        threads=threads,
        tol_row=tol_row,
        tol_rev=tol_rev,
        residual_tol=residual_tol,
    )
    execute(config)


@app.command()
def curvature(
    input_file: Path = INPUT_ARGUMENT,
    output_file: Path = OUTPUT_OPTION,
    fast_mode: bool = FAST_OPTION,
    d_offdiag: bool = D_OFFDIAG_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    tol_row: Optional[float] = TOL_ROW_OPTION,
    tol_rev: Optional[float] = TOL_REV_OPTION,
):
    """Compute the Bakry-Emery and Ollivier-Ricci curvatures"""
    config = _config(
        Subcommand.curvature,
        input=input_file,
        output=output_file,
        fast_mode=fast_mode,
        d_offdiag=d_offdiag,
        threads=threads,
        tol_row=tol_row,
        tol_rev=tol_rev,
    )
    execute(config)


@app.command()
def verify(
    input_file: Path = INPUT_ARGUMENT,
    output_file: Path = OUTPUT_OPTION,
    suite: Suite = SUITE_OPTION,
    restarts: int = RESTARTS_OPTION,
    seed: int = SEED_OPTION,
    samples: int = SAMPLES_OPTION,
    fast_mode: bool = FAST_OPTION,
    d_offdiag: bool = D_OFFDIAG_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    tol_row: Optional[float] = TOL_ROW_OPTION,
    tol_rev: Optional[float] = TOL_REV_OPTION,
    residual_tol: Optional[float] = RESIDUAL_TOL_OPTION,
):
    """Machine-check the theorem and lemma inequalities on a chain"""
    config = _config(
        Subcommand.verify,
        input=input_file,
        output=output_file,
        suite=suite,
        restarts=restarts,
        seed=seed,
        samples=samples,
        fast_mode=fast_mode,
        d_offdiag=d_offdiag,
        threads=threads,
        tol_row=tol_row,
        tol_rev=tol_rev,
        residual_tol=residual_tol,
    )
    execute(config)


@app.command()
def generate(
    family: str = typer.Argument(
        None, help="family to generate (see `filab families`), optional with --params"
    ),
    output_file: Path = typer.Option(
        None, "--out", "-o", help="file to write the chain to, stdout if not set"
    ),
    n: int = typer.Option(None, "--n", min=1, help="size parameter"),
    p: float = typer.Option(None, "--p", min=0, max=1, help="edge probability"),
    seed: int = typer.Option(None, "--seed", min=0, help="seed of random families"),
    weights: str = typer.Option(
        None, "--weights", callback=parse_floats, help="comma separated stationary weights"
    ),
    up: str = typer.Option(
        None, "--up", callback=parse_floats, help="comma separated rates T(x,x+1)"
    ),
    down: str = typer.Option(
        None, "--down", callback=parse_floats, help="comma separated rates T(x+1,x)"
    ),
    params_file: typer.FileText = typer.Option(
        None, "--params", help="JSON file holding the family parameters (needed for product)"
    ),
):
    """Generate a chain of a registered family"""
    try:
        if params_file is not None:
            params = FamilyParams.model_validate_json(params_file.read())
        elif family is None:
            raise typer.BadParameter("give a family name or --params")
        else:
            params = FamilyParams(
                family=family, n=n, p=p, seed=seed, weights=weights, up=up, down=down
            )
    except ValidationError as e:
        typer.echo(f"Invalid family parameters: {e}", err=True)
        raise typer.Exit(code=EXIT_INPUT_ERROR)
    config = _config(Subcommand.generate, output=output_file)
    execute(config, params)


@app.command()
def families():
    """List the chain families `generate` can build"""
    header = "============= Families ============="
    footer = "===================================="
    typer.echo(header)
    typer.echo("")
    for i, family in enumerate(get_all_family_def()):
        typer.echo(f"[{i + 1}] {family['family']}: {family['description']}")
    typer.echo("")
    typer.echo(footer)


@app.callback()
def main(
    verbose: int = typer.Option(0, "--verbose", "-v", count=True, help="verbose level")
):
    """Numerical laboratory for log-Sobolev inequalities and curvature of finite Markov chains"""
    global VERBOSE
    VERBOSE = verbose
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def run_cli():
    app()


if __name__ == "__main__":
    run_cli()
