"""Exception hierarchy shared by the library and the command line front end."""


class WeylHeatError(Exception):
    """Base class for all library errors."""


class ValidationError(WeylHeatError, ValueError):
    """Malformed input: wrong shape, asymmetric metric, non-antisymmetric curvature."""


class DomainError(WeylHeatError, ValueError):
    """Argument outside the domain of an analytic function (e.g. tanh^{-1} at |z| >= 1)."""


class MethodFailure(WeylHeatError, ArithmeticError):
    """A numerical method could not produce a trustworthy answer."""


class DivergenceError(WeylHeatError, ArithmeticError):
    """An integral that was asked for does not converge."""
