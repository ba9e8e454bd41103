"""Exception hierarchy shared by the solver, density and CLI layers."""


class MIWError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateConfigurationError(MIWError, ValueError):
    """A world configuration is not strictly decreasing and positive."""


class BracketError(MIWError):
    """No sign change of the boundary residual could be located."""


class ConvergenceError(MIWError):
    """The root search stopped before meeting its tolerance."""

    def __init__(self, message, *, iterations=None, bracket=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.bracket = bracket
        self.residual = residual


class QuadratureError(MIWError):
    """Adaptive quadrature failed to converge or produced a non-finite value."""
