"""Matrix exponential by quadrature on a rectangular contour.

``exp(A)`` for ``A`` with spectrum in the open left half-plane is split into a
semi-infinite integral, evaluated by a double-exponential rule, and a finite
oscillatory integral, evaluated by Gauss-Legendre. Both need only shifted
linear solves.
"""

from .errors import (
    ExpmError,
    NumericalFailure,
    ParameterDomainError,
    PoleProximityError,
    SingularMatrixError,
    SpectrumError,
)
from .matexp import MatExpResult, bound_constants, expm, expm_action, expm_shifted, gershgorin_envelope
from .params import QuadParams, SpectralEnvelope, make_params, solve_alpha
from .scalar import exp_scalar

__all__ = [
    "ExpmError",
    "NumericalFailure",
    "ParameterDomainError",
    "PoleProximityError",
    "SingularMatrixError",
    "SpectrumError",
    "MatExpResult",
    "bound_constants",
    "expm",
    "expm_action",
    "expm_shifted",
    "gershgorin_envelope",
    "QuadParams",
    "SpectralEnvelope",
    "make_params",
    "solve_alpha",
    "exp_scalar",
]

__version__ = "0.1.0"
