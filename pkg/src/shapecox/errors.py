"""Exception hierarchy shared across the package.

Input problems (bad files, malformed arrays, invalid arguments) raise
subclasses of :class:`ValueError`; optimization failures raise subclasses
of :class:`FitError` so callers can distinguish "fix your data" from
"the fit broke" with two except clauses.
"""


class SchemaError(ValueError):
    """A column mapping names columns that the file does not provide."""


class ParseError(ValueError):
    """A CSV cell could not be interpreted as a number."""


class ValidationError(ValueError):
    """Data violates a structural requirement (shapes, finiteness, events)."""


class FitError(RuntimeError):
    """An estimation routine failed to produce a usable result."""


class SingularHessianError(FitError):
    """The linear part of the design is rank deficient."""


class SeparationError(FitError):
    """The partial likelihood is maximized at infinite coefficients."""


class NumericalError(FitError):
    """An internal computation left the representable range or stalled."""
