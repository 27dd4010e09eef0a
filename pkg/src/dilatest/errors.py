"""Exception types shared across the package."""


class DilatestError(Exception):
    """Base class for all package errors."""


class EmptyIntersection(DilatestError):
    """A box does not contain a single full grid cell."""


class ResolutionExceeded(DilatestError):
    """A dyadic level is finer than the grid can resolve."""


class OutOfDomain(DilatestError):
    """An evaluation point (or a whole quadrature window) leaves the sampled box."""


class InvalidExponent(DilatestError):
    """An integrability exponent is outside its admissible range."""


class NonPositiveValue(DilatestError):
    """A weight evaluated to zero, a negative number, or a non-finite value."""


class MissingLevels(DilatestError):
    """A weight sequence is shorter than the requested level truncation."""


class NyquistExceeded(DilatestError):
    """A frequency band does not fit below the grid Nyquist frequency."""


class ClippingExcessive(DilatestError):
    """Dilation pushed more than the tolerated share of mass outside the grid."""


class PreconditionFailed(DilatestError):
    """A documented precondition of an operation failed its diagnostic scan."""


class ConfigError(DilatestError):
    """A run configuration failed validation."""
