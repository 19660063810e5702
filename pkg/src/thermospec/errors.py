"""Exception types raised across the package."""


class ThermospecError(Exception):
    """Base class for all package errors."""


class InputError(ThermospecError, ValueError):
    """Malformed user input (bad matrix, bad parameter, bad config)."""


class NotTransitiveError(InputError):
    pass


class MismatchedSpaceError(InputError):
    pass


class MissingCodingError(InputError):
    pass


class ConfigError(InputError):
    """Parse error in a system-definition file; carries the line number."""

    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class BudgetExceededError(ThermospecError):
    """Enumeration or matrix size over the configured cap."""


class LatticeExplosionError(BudgetExceededError):
    pass


class NumericalError(ThermospecError, ArithmeticError):
    """A numerical routine failed to converge or to bracket."""


class ConvergenceError(NumericalError):
    """Eigen-iteration did not certify; ``bracket`` holds (lower, upper) in log scale."""

    def __init__(self, message, bracket=None):
        self.bracket = bracket
        super().__init__(message)


class BracketError(NumericalError):
    pass


class InfeasibleConstraintError(NumericalError):
    pass
