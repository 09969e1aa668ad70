"""Golden-data regression tables stored as plain CSV next to the tests."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Sequence

import numpy as np

from multiperiod.exceptions import PreconditionError


class GoldenStatus(str, Enum):
    CREATED = "created"
    MATCHED = "matched"
    MISMATCH = "mismatch"


@dataclass(frozen=True)
class GoldenResult:
    status: GoldenStatus
    path: Path
    max_deviation: float = 0.0
    column: str | None = None

    @property
    def ok(self) -> bool:
        return self.status != GoldenStatus.MISMATCH


def write_table(path: str | Path, table: Dict[str, Sequence[float]]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(column, dtype=float) for column in table.values()])
    np.savetxt(
        target, data, delimiter=",", fmt="%.17g", header=",".join(table), comments=""
    )
    return target


def read_table(path: str | Path) -> Dict[str, np.ndarray]:
    target = Path(path)
    with target.open(encoding="utf-8") as file:
        names = file.readline().strip().split(",")
    data = np.loadtxt(target, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(names)}


def check_golden(
    path: str | Path,
    table: Dict[str, Sequence[float]],
    rtol: float = 1e-10,
    atol: float = 1e-13,
) -> GoldenResult:
    """Compare a freshly computed table with its stored baseline.

    A missing baseline is written from `table` and reported as created. `atol`
    covers entries that sit on the numerical noise floor, such as zero modes.
    """
    target = Path(path)
    if not target.exists():
        write_table(target, table)
        return GoldenResult(GoldenStatus.CREATED, target)

    stored = read_table(target)
    if list(stored) != list(table):
        raise PreconditionError(
            f"golden table {target} has columns {list(stored)}, expected {list(table)}"
        )

    worst, worst_column = 0.0, None
    for name, column in table.items():
        fresh = np.asarray(column, dtype=float)
        if fresh.shape != stored[name].shape:
            return GoldenResult(GoldenStatus.MISMATCH, target, np.inf, name)

        excess = np.abs(fresh - stored[name]) - (atol + rtol * np.abs(stored[name]))
        deviation = float(np.max(np.abs(fresh - stored[name]), initial=0.0))
        if deviation > worst:
            worst, worst_column = deviation, name
        if np.any(excess > 0):
            return GoldenResult(GoldenStatus.MISMATCH, target, deviation, name)

    return GoldenResult(GoldenStatus.MATCHED, target, worst, worst_column)
