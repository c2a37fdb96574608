"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the documented domain of an operation."""


class PoleError(DomainError):
    """Evaluation requested at, or dangerously close to, a pole.

    Raised instead of returning a huge cancellation-polluted value.
    """


class ConvergenceError(RuntimeError):
    """An adaptive scheme could not reach the requested tolerance."""


class NotPrimeError(DomainError):
    """Modulus is not an odd prime."""


class CoefficientDataError(ValueError):
    """Coefficient stream failed validation (parse, normalization, Hecke)."""
