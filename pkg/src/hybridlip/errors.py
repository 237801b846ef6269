"""Exception hierarchy.

Validation problems (bad shapes, malformed models, unsupported options)
derive from :class:`ValidationError`; the CLI maps them to exit code 1.
Numerical breakdowns derive from :class:`NumericalError` (exit code 2).
"""


class HybridLipError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HybridLipError, ValueError):
    pass


class NumericalError(HybridLipError, ArithmeticError):
    pass


class InvalidOperator(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidPovm(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class UnboundParameter(ValidationError):
    pass


class OutcomeLimitExceeded(ValidationError):
    pass


class UseProductBound(ValidationError):
    """Raised by the SDP certifier when the net has no nonlinear layer."""


class UnsupportedEncoding(ValidationError):
    pass


class UnsupportedGateParam(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass
