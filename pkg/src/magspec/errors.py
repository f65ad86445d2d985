"""Exception hierarchy shared by all modules."""


class MagspecError(Exception):
    """Base class for errors raised by this package."""


class DomainError(MagspecError, ValueError):
    """Input outside the domain where a quantity is defined."""


class DegeneracyError(MagspecError):
    """A rank or kernel condition needed by the operation fails at a point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalFailure(MagspecError):
    """Generic non-convergence; the CLI maps this family to exit code 3."""


class ContinuityError(NumericalFailure):
    pass


class UsageError(MagspecError, ValueError):
    pass


class NoWellError(MagspecError):
    """The classically allowed region of an effective potential is empty."""


class DivergenceError(NumericalFailure):
    """Degenerate turning point: period and drift integrals diverge."""


class BracketError(NumericalFailure):
    pass


class StiffnessError(NumericalFailure):
    pass


class ResolutionError(NumericalFailure):
    """Finite-difference counts at successive grids never agreed."""

    def __init__(self, message, counts=None):
        super().__init__(message)
        self.counts = counts


class MultiWellError(MagspecError):
    pass


class AccuracyError(NumericalFailure):
    pass


class WindowError(MagspecError):
    pass

