"""Exception hierarchy shared by the library and the CLI."""


class ExpmError(Exception):
    """Base class for all errors raised by rectexpm."""

    exit_code = 1


class ParameterDomainError(ExpmError, ValueError):
    """A method parameter lies outside its admissible window."""

    exit_code = 2


class SpectrumError(ParameterDomainError):
    """The spectrum is not certifiably in the open left half-plane."""


class NumericalFailure(ExpmError, ArithmeticError):
    """An iteration failed to converge or a computation broke down."""

    exit_code = 3


class SingularMatrixError(NumericalFailure):
    pass


class PoleProximityError(NumericalFailure):
    """A quadrature node landed on (or next to) a pole of the integrand."""
