import warnings
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.progress import track

from multiperiod.exceptions import (
    CapacityError,
    ConfigError,
    MultiperiodException,
    PreconditionError,
    RwaValidityWarning,
)
from multiperiod.logs import checks_table, console, error_console, report_warnings
from multiperiod.runner import run_scenario
from multiperiod.scenario import ScenarioFile, parse_seeds
from multiperiod.verify import verify_all

EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_CAPACITY = 3

app = typer.Typer(
    name="multiperiod",
    help="Multiperiod is a command-line tool for reproducible Floquet qubit, spin chain and Kitaev chain sweeps.",
)


def exit_code(error: MultiperiodException) -> int:
    """Map an exception onto the documented exit codes."""
    if isinstance(error, (ConfigError, PreconditionError)):
        return EXIT_CONFIG
    if isinstance(error, CapacityError):
        return EXIT_CAPACITY
    return EXIT_INVARIANT


@app.command()
def run(
    config: Annotated[Path, typer.Argument(help="The scenario config (TOML).")],
    out: Annotated[
        Optional[Path],
        typer.Option("--out", help="Output directory, overrides 'output' in the config."),
    ] = None,
    threads: Annotated[
        int, typer.Option("--threads", min=1, help="Number of sweep points run concurrently.")
    ] = 1,
    tol: Annotated[
        Optional[float],
        typer.Option("--tol", help="Replace the numerical tolerance of every invariant check."),
    ] = None,
    seed: Annotated[
        Optional[str],
        typer.Option("--seed", help="Comma-separated seed list, overrides 'seeds'."),
    ] = None,
) -> None:
    """
    Run a scenario sweep and write <scenario>.csv and <scenario>.json.
    """
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RwaValidityWarning)

            with ScenarioFile(config) as scenario_file:
                cfg = scenario_file.config
            cfg = cfg.with_overrides(
                output=out, seeds=parse_seeds(seed) if seed is not None else None
            )

            with console.status(f"Running {cfg.scenario}...\n"):
                report = run_scenario(cfg, threads=threads, tol=tol)
        report_warnings(caught)
    except MultiperiodException as e:
        error_console.print(e)
        raise typer.Exit(exit_code(e))

    if report.checks:
        console.print(checks_table(report.checks, f"{cfg.scenario} invariant checks"))
    console.print(
        f"{len(report.rows)} rows from {report.n_points} points written to {cfg.output_dir}"
    )

    if not report.passed:
        error_console.print("Error: invariant checks failed.")
        raise typer.Exit(EXIT_INVARIANT)

    console.print("[bold green]Scenario successfully completed.[/bold green]")


@app.command()
def verify(
    tol: Annotated[
        Optional[float],
        typer.Option("--tol", help="Replace the numerical tolerance of every check."),
    ] = None,
) -> None:
    """
    Run the cross-oracle verification suite and print a summary table.
    """
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RwaValidityWarning)
            summary = verify_all(
                tol,
                progress=lambda verifiers: track(
                    verifiers, description="Verifying...", transient=True
                ),
            )
        report_warnings(caught)
    except MultiperiodException as e:  # pragma: no cover
        error_console.print(e)
        raise typer.Exit(exit_code(e))

    console.print(summary.table())

    if not summary.passed:
        for failure in summary.failures:
            error_console.print(
                f"Error: {failure.name} worst residual {failure.worst_residual:.3e} "
                f"exceeds {failure.tol:.1e}\n{failure.detail}"
            )
        raise typer.Exit(EXIT_INVARIANT)

    console.print("[bold green]All checks passed.[/bold green]")
