"""Exception hierarchy shared by the library and the CLI."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class NumericalError(ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""


class SeriesTruncationError(NumericalError):
    """The term cap was reached before the series met its tolerance."""


class RootNotBracketedError(NumericalError):
    """The cutoff equation does not change sign on the search interval."""


class DegenerateSampleError(NumericalError):
    """A Monte Carlo estimator has no usable samples."""
