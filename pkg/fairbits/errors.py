"""Exception types raised by the library and mapped to CLI exit codes."""


class FairbitsError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ArgumentError(FairbitsError, ValueError):
    """Invalid parameter: population size, width, range, sample size or scheme."""

    exit_code = 2


class BudgetExceededError(FairbitsError):
    """An exhaustive enumeration was requested beyond the configured budget."""

    exit_code = 3

    def __init__(self, message: str, guidance: str = ""):
        super().__init__(message)
        self.guidance = guidance


class SourceExhaustedError(FairbitsError, RuntimeError):
    """A fixed bit source was asked for more bits than it holds."""

    def __init__(self, requested: int, available: int):
        super().__init__(f"Bit source exhausted: requested {requested} bits, {available} available")
        self.requested = requested
        self.available = available
