from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple, cast

import numpy as np
import tomlkit
import tomlkit.exceptions

from multiperiod.exceptions import ConfigError

TOP_LEVEL_KEYS = ("scenario", "output", "seeds", "dump", "fixed", "sweep")
SWEEP_KEYS = ("start", "stop", "count", "values", "unit")
FIXED_KEYS = ("value", "unit")
DEFAULT_OUTPUT = "results"


@dataclass(frozen=True)
class Symbol:
    """A scenario input: its canonical unit, default (None if required) and integrality."""

    unit: str
    default: float | None = None
    integer: bool = False


_J = Symbol("J")
_J_UNIT = Symbol("J", 1.0)

SCENARIOS: Dict[str, Dict[str, Symbol]] = {
    "single-qubit-quasienergy": {
        "Omega": Symbol("1/T"),
        "F1": Symbol("rad"),
        "theta": Symbol("rad", math.pi / 4),
        "T": Symbol("time", 1.0),
        "t0": Symbol("T", 0.5),
    },
    "ramsey": {
        "nu1": Symbol("rad"),
        "k_max": Symbol("periods", 16, integer=True),
        "max_N": Symbol("periods", 8, integer=True),
    },
    "resonant-pulse": {
        "F1": Symbol("rad"),
        "k_max": Symbol("periods", 16, integer=True),
        "max_N": Symbol("periods", 8, integer=True),
    },
    "two-qubit-crossing": {"mu": _J, "F": _J, "J": _J_UNIT},
    "chain-ed": {
        "L": Symbol("sites", integer=True),
        "mu": _J,
        "F": _J,
        "J": _J_UNIT,
        "site_sigma": Symbol("J", 0.0),
    },
    "kitaev-fig3": {
        "L": Symbol("sites", 16, integer=True),
        "F": _J,
        "mu": _J,
        "J": _J_UNIT,
    },
    "gap-scan": {"L": Symbol("sites", integer=True), "F": _J, "mu": _J, "J": _J_UNIT},
    "disorder": {
        "L": Symbol("sites", 16, integer=True),
        "mu": _J,
        "F": _J,
        "J": _J_UNIT,
        "site_sigma": Symbol("J", 0.0),
        "bond_sigma": Symbol("J", 0.0),
        "pair_sigma": Symbol("J", 0.0),
    },
}


def _line_of(text: str, pattern: str) -> int | None:
    match = re.search(pattern, text, flags=re.MULTILINE)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _key_line(text: str, key: str) -> int | None:
    return _line_of(text, rf"^\s*{re.escape(key)}\s*=")


def _table_line(text: str, table: str) -> int | None:
    return _line_of(text, rf"^\s*\[\s*{re.escape(table)}\s*\]|{re.escape(table)}\s*=")


def _number(value: Any, field_name: str, line: int | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field_name, line)
    number = float(value)
    if not math.isfinite(number):
        raise ConfigError(f"expected a finite number, got {value!r}", field_name, line)
    return number


def _reject_unknown(
    table: Mapping[str, Any], allowed: Tuple[str, ...], prefix: str, text: str
) -> None:
    for key in table:
        if key not in allowed:
            name = f"{prefix}{key}"
            raise ConfigError(
                f"unknown key (expected one of: {', '.join(allowed)})",
                name,
                _key_line(text, key) or _table_line(text, name),
            )


def _check_unit(symbol: Symbol, unit: Any, field_name: str, line: int | None) -> str | None:
    if unit is None:
        return None
    if str(unit) != symbol.unit:
        raise ConfigError(
            f"unit {str(unit)!r} does not match the canonical unit {symbol.unit!r}",
            field_name,
            line,
        )
    return str(unit)


@dataclass(frozen=True)
class Fixed:
    value: float
    unit: str | None = None


@dataclass(frozen=True)
class Sweep:
    """A swept symbol: either a linear range (start, stop, count) or explicit values."""

    start: float | None = None
    stop: float | None = None
    count: int | None = None
    values: Tuple[float, ...] | None = None
    unit: str | None = None

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.count == 1:
            return np.array([self.start], dtype=float)
        return np.linspace(self.start, self.stop, cast(int, self.count))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    fixed: Dict[str, Fixed] = field(default_factory=dict)
    sweeps: Dict[str, Sweep] = field(default_factory=dict)
    output: str | None = None
    seeds: Tuple[int, ...] = (0,)
    dump: bool = False

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r} "
                f"(expected one of: {', '.join(SCENARIOS)})",
                "scenario",
            )

    @property
    def symbols(self) -> Dict[str, Symbol]:
        return SCENARIOS[self.scenario]

    @property
    def output_dir(self) -> Path:
        return Path(self.output or DEFAULT_OUTPUT)

    @classmethod
    def from_toml(cls, text: str) -> ScenarioConfig:
        try:
            doc = tomlkit.parse(text)
        except tomlkit.exceptions.ParseError as e:
            raise ConfigError(f"invalid TOML: {e}", line=e.line)
        return cls.from_document(doc.unwrap(), text)

    @classmethod
    def from_document(cls, doc: Mapping[str, Any], text: str = "") -> ScenarioConfig:
        """Validate a parsed document against the scenario's symbol table."""
        _reject_unknown(doc, TOP_LEVEL_KEYS, "", text)

        scenario = doc.get("scenario")
        if scenario is None:
            raise ConfigError("missing required key", "scenario")
        scenario = str(scenario)
        if scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {scenario!r} (expected one of: {', '.join(SCENARIOS)})",
                "scenario",
                _key_line(text, "scenario"),
            )
        symbols = SCENARIOS[scenario]

        fixed = {
            name: cls._parse_fixed(symbols, name, value, text)
            for name, value in doc.get("fixed", {}).items()
        }
        sweeps = {
            name: cls._parse_sweep(symbols, name, value, text)
            for name, value in doc.get("sweep", {}).items()
        }

        overlap = sorted(set(fixed) & set(sweeps))
        if overlap:
            name = f"sweep.{overlap[0]}"
            raise ConfigError("symbol is both fixed and swept", name, _table_line(text, name))
        for name, symbol in symbols.items():
            if symbol.default is None and name not in fixed and name not in sweeps:
                raise ConfigError(
                    f"required symbol for scenario {scenario!r} is missing", name
                )

        seeds = doc.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("expected a non-empty list of integers", "seeds", _key_line(text, "seeds"))
        for seed in seeds:
            if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
                raise ConfigError(
                    f"seeds must be non-negative integers, got {seed!r}",
                    "seeds",
                    _key_line(text, "seeds"),
                )

        dump = doc.get("dump", False)
        if not isinstance(dump, bool):
            raise ConfigError(f"expected true or false, got {dump!r}", "dump", _key_line(text, "dump"))

        output = doc.get("output")
        return cls(
            scenario=scenario,
            fixed=fixed,
            sweeps=sweeps,
            output=None if output is None else str(output),
            seeds=tuple(int(seed) for seed in seeds),
            dump=bool(dump),
        )

    @staticmethod
    def _symbol(symbols: Dict[str, Symbol], name: str, prefix: str, text: str) -> Symbol:
        if name not in symbols:
            raise ConfigError(
                f"unknown symbol (expected one of: {', '.join(symbols)})",
                f"{prefix}.{name}",
                _key_line(text, name) or _table_line(text, f"{prefix}.{name}"),
            )
        return symbols[name]

    @staticmethod
    def _check_integer(symbol: Symbol, values, field_name: str, line: int | None) -> None:
        if symbol.integer and any(value != round(value) for value in values):
            raise ConfigError("expected integer values", field_name, line)

    @classmethod
    def _parse_fixed(cls, symbols: Dict[str, Symbol], name: str, value: Any, text: str) -> Fixed:
        field_name = f"fixed.{name}"
        symbol = cls._symbol(symbols, name, "fixed", text)
        line = _key_line(text, name)

        unit = None
        if isinstance(value, Mapping):
            _reject_unknown(value, FIXED_KEYS, f"{field_name}.", text)
            if "value" not in value:
                raise ConfigError("missing required key 'value'", field_name, line)
            unit = _check_unit(symbol, value.get("unit"), field_name, line)
            value = value["value"]

        number = _number(value, field_name, line)
        cls._check_integer(symbol, [number], field_name, line)
        return Fixed(number, unit)

    @classmethod
    def _parse_sweep(cls, symbols: Dict[str, Symbol], name: str, table: Any, text: str) -> Sweep:
        field_name = f"sweep.{name}"
        symbol = cls._symbol(symbols, name, "sweep", text)
        line = _table_line(text, field_name)

        if not isinstance(table, Mapping):
            raise ConfigError("expected a table", field_name, line)
        _reject_unknown(table, SWEEP_KEYS, f"{field_name}.", text)
        unit = _check_unit(symbol, table.get("unit"), field_name, line)

        if "values" in table:
            if any(key in table for key in ("start", "stop", "count")):
                raise ConfigError(
                    "use either 'values' or 'start'/'stop'/'count', not both", field_name, line
                )
            raw = table["values"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("'values' must be a non-empty list", field_name, line)
            values = tuple(_number(value, field_name, line) for value in raw)
            cls._check_integer(symbol, values, field_name, line)
            return Sweep(values=values, unit=unit)

        count = table.get("count")
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError(f"'count' must be an integer >= 1, got {count!r}", field_name, line)
        if "start" not in table:
            raise ConfigError("missing required key 'start'", field_name, line)
        start = _number(table["start"], field_name, line)
        if "stop" not in table:
            if count != 1:
                raise ConfigError("missing required key 'stop'", field_name, line)
            stop = None
        else:
            stop = _number(table["stop"], field_name, line)

        sweep = Sweep(start=start, stop=stop, count=int(count), unit=unit)
        cls._check_integer(symbol, sweep.points(), field_name, line)
        return sweep

    def to_document(self) -> tomlkit.TOMLDocument:
        def number(name: str, value: float) -> int | float:
            return int(value) if self.symbols[name].integer else float(value)

        doc = tomlkit.document()
        doc["scenario"] = self.scenario
        if self.output is not None:
            doc["output"] = self.output
        doc["seeds"] = list(self.seeds)
        doc["dump"] = self.dump

        if self.fixed:
            fixed = tomlkit.table()
            for name, entry in self.fixed.items():
                if entry.unit is None:
                    fixed[name] = number(name, entry.value)
                else:
                    item = tomlkit.inline_table()
                    item.update({"value": number(name, entry.value), "unit": entry.unit})
                    fixed[name] = item
            doc["fixed"] = fixed

        if self.sweeps:
            sweeps = tomlkit.table(is_super_table=True)
            for name, sweep in self.sweeps.items():
                table = tomlkit.table()
                if sweep.values is not None:
                    table["values"] = [number(name, value) for value in sweep.values]
                else:
                    table["start"] = number(name, cast(float, sweep.start))
                    if sweep.stop is not None:
                        table["stop"] = number(name, sweep.stop)
                    table["count"] = sweep.count
                if sweep.unit is not None:
                    table["unit"] = sweep.unit
                sweeps[name] = table
            doc["sweep"] = sweeps

        return doc

    def to_toml(self) -> str:
        return tomlkit.dumps(self.to_document())

    def save(self, path: str | Path) -> Path:
        target = Path(path)
        target.write_text(self.to_toml(), encoding="utf-8")
        return target

    def with_overrides(
        self, output: str | Path | None = None, seeds: Tuple[int, ...] | None = None
    ) -> ScenarioConfig:
        """Command-line flags take precedence over the file."""
        return replace(
            self,
            output=self.output if output is None else str(output),
            seeds=self.seeds if seeds is None else tuple(seeds),
        )

    def points(self) -> List[Dict[str, float]]:
        """Every input tuple of the sweep, the last swept symbol varying fastest."""
        base = {
            name: symbol.default
            for name, symbol in self.symbols.items()
            if symbol.default is not None
        }
        base.update({name: entry.value for name, entry in self.fixed.items()})

        swept = [name for name in self.symbols if name in self.sweeps]
        grids = [self.sweeps[name].points() for name in swept]
        points = []
        for combination in itertools.product(*grids):
            point = dict(base)
            point.update({name: float(value) for name, value in zip(swept, combination)})
            points.append({name: point[name] for name in self.symbols})
        return points


class ScenarioFile:
    """A scenario config on disk, parsed and validated on entry."""

    def __init__(self, path: str | Path) -> None:
        self.path = path if isinstance(path, Path) else Path(path).resolve()
        self._config: ScenarioConfig | None = None

    def __enter__(self) -> ScenarioFile:
        if not self.path.exists():
            raise ConfigError(f"scenario file not found at {self.path}")

        text = self.path.read_text(encoding="utf-8")
        self._config = ScenarioConfig.from_toml(text)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self._config = None

    @property
    def config(self) -> ScenarioConfig:
        if self._config is None:
            raise ValueError("the scenario file is not loaded.")
        return self._config


def parse_seeds(value: str) -> Tuple[int, ...]:
    """Parse a comma-separated seed list such as "1,2,3"."""
    try:
        seeds = tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"invalid seed list {value!r}", "seeds")
    if not seeds or any(seed < 0 for seed in seeds):
        raise ConfigError(f"invalid seed list {value!r}", "seeds")
    return seeds
