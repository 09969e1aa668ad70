class MultiperiodException(Exception):
    """The base exception class for all multiperiod exceptions."""


class ConfigError(MultiperiodException):
    """Raised when a scenario config cannot be parsed or validated."""

    def __init__(
        self, message: str, field: str | None = None, line: int | None = None
    ) -> None:
        self.field = field
        self.line = line

        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""

        super().__init__(f"Error: {prefix}{message}")


class CapacityError(MultiperiodException):
    """Raised when a problem size exceeds a memory guard."""


class PreconditionError(MultiperiodException, ValueError):
    """Raised when physical inputs violate an operation's preconditions."""


class NumericalError(MultiperiodException):
    """Raised when an analytically impossible numerical state is reached."""


class InvariantError(MultiperiodException):
    """Raised when an embedded invariant check fails."""


class RwaValidityWarning(UserWarning):
    """Parameters are outside the regime where the rotating wave approximation holds."""
