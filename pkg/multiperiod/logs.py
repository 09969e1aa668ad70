from __future__ import annotations

import warnings
from typing import TYPE_CHECKING, Iterable, List

from rich.console import Console
from rich.table import Table

from multiperiod.exceptions import RwaValidityWarning

if TYPE_CHECKING:
    from multiperiod.runner import CheckResult

# Use these consoles for printing
console = Console()
error_console = Console(stderr=True, style="bold red")
warning_console = Console(stderr=True, style="yellow")


def report_warnings(caught: Iterable[warnings.WarningMessage]) -> int:
    """Print the physics advisories recorded during a command, once per message."""
    seen = set()
    for warning in caught:
        if not issubclass(warning.category, RwaValidityWarning):
            continue
        message = str(warning.message)
        if message not in seen:
            seen.add(message)
            warning_console.print(f"Warning: {message}")
    return len(seen)


def checks_table(results: List[CheckResult], title: str) -> Table:
    table = Table(title=title)
    table.add_column("Check")
    table.add_column("Worst residual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Status")
    for result in results:
        if result.passed:
            status = "[green]pass[/green]"
        elif result.reference:
            status = "[yellow]above reference[/yellow]"
        else:
            status = "[bold red]FAIL[/bold red]"
        table.add_row(
            result.name, f"{result.worst_residual:.3e}", f"{result.tol:.1e}", status
        )
    return table
