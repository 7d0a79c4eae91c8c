"""Exception hierarchy shared by all solver stages."""


class LayeredScatterError(Exception):
    """Base class for all package errors."""


class ConfigurationError(LayeredScatterError):
    """Invalid or inadmissible configuration (bad JSON, degenerate region,
    obstacle touching the interface, ...)."""


class GeometryError(LayeredScatterError):
    """A geometric precondition is violated (probe too close to a boundary,
    ball radius too large, ...)."""


class SingularityError(LayeredScatterError):
    """Evaluation requested at (or too close to) a source singularity."""


class AccuracyError(LayeredScatterError):
    """A quadrature or solver failed to reach the requested tolerance.

    The best available estimate is carried so callers can decide whether to
    accept it.
    """

    def __init__(self, message, value=None, estimate=None):
        super().__init__(message)
        self.value = value
        self.estimate = estimate


class SolverError(LayeredScatterError):
    """Dense factorization or linear solve failed (singular matrix)."""
