"""Exception hierarchy shared by all modules."""


class LatticeSpecError(Exception):
    """Base class for every error raised by :mod:`lattice_spec`."""


class DomainError(LatticeSpecError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NonConvergence(LatticeSpecError, ArithmeticError):
    """A quadrature or root search could not reach the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BracketFailure(LatticeSpecError, ArithmeticError):
    """The eigenvalue function does not change sign on its bracket."""


class IterationLimit(LatticeSpecError, ArithmeticError):
    """An iterative eigensolver stalled; ``last`` holds the final iterate."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class InsufficientDecay(LatticeSpecError, ValueError):
    """Too few sites above the noise floor to fit a decay rate."""
