"""Exception hierarchy shared by all modules."""


class RingSAPError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RingSAPError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(RingSAPError, ValueError):
    """Inconsistent trap, protocol or run configuration."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DegeneracyError(RingSAPError, ArithmeticError):
    """The overlap matrix of a set of states is numerically singular."""


class UndefinedAngleError(RingSAPError, ArithmeticError):
    """A mixing angle is requested where it is undefined."""


class UndefinedWindingError(RingSAPError, ArithmeticError):
    """No circle with non-negligible density to measure a winding number on."""


class NumericalError(RingSAPError, RuntimeError):
    """An iterative method failed to converge."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class StepSizeError(NumericalError):
    """Norm drift exceeded its bound; retry with a smaller time step."""


class ResolutionError(NumericalError):
    """The radial grid is too coarse for the states being integrated."""
