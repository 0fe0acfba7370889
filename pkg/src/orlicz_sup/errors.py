"""Exception hierarchy shared by all modules."""


class OrliczError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(OrliczError, ValueError):
    """A parameter lies outside its documented range."""


class AdmissibilityError(InvalidParameterError):
    """OU exponents violate 2/beta2 < 1/beta1 + 1, or alpha is outside its interval."""


class DomainOverflowError(OrliczError, OverflowError):
    """An evaluation would leave the finite domain of an N-function."""


class CapabilityError(OrliczError):
    """The N-function lacks metadata (delta2 / class E) required by a bound."""


class DivergenceError(OrliczError, ArithmeticError):
    """A quadrature failed to converge; the bound it feeds is unavailable.

    ``hypothesis`` names the finiteness condition that failed.
    """

    def __init__(self, message, hypothesis=None):
        super().__init__(message)
        self.hypothesis = hypothesis


class SingularEndpointError(InvalidParameterError):
    """A closed form was evaluated at an endpoint where it is singular."""
