"""Scalar reference implementation of the rectangular-contour formula.

For ``Re z < 0`` and any ``alpha > |Im z|``::

    exp(z) = I_alpha(z) + J_alpha(z)

    I_alpha(z) = int_0^inf f_alpha(z, x) dx          (non-oscillatory, DE rule)
    J_alpha(z) = int_{-1}^{1} g_alpha(z, x) dx       (oscillatory, Gauss-Legendre)

with ``f_alpha`` the contributions of the two horizontal edges of the
rectangle and ``g_alpha`` the vertical edge on the imaginary axis.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from ._summation import pairwise_sum
from .errors import ParameterDomainError, PoleProximityError
from .params import LOG2, TWO_PI, QuadParams, rho
from .quad_rules import de_rule, gauss_legendre

__all__ = [
    "f_alpha",
    "g_alpha",
    "approx_I",
    "approx_J",
    "exp_scalar",
    "bound_I",
    "bound_J",
    "K_constant",
]

POLE_TOL = 1e-12


def _check_pole(dist, what: str) -> None:
    if np.min(np.abs(dist)) < POLE_TOL:
        raise PoleProximityError(f"quadrature node within {POLE_TOL:g} of a pole of {what}")


def f_alpha(z: complex, alpha: float, x):
    """Integrand of the semi-infinite part.

    ``(1/2 pi i) (e^{i alpha}/(z - i alpha + x) - e^{-i alpha}/(z + i alpha + x)) e^{-x}``
    """
    x = np.asarray(x, dtype=complex)
    dm = z - 1j * alpha + x
    dp = z + 1j * alpha + x
    _check_pole(dm, "f_alpha")
    _check_pole(dp, "f_alpha")
    e = cmath.exp(1j * alpha)
    val = (e / dm - e.conjugate() / dp) * np.exp(-x) / (2j * math.pi)
    return val[()] if val.ndim == 0 else val


def _f_alpha_real(z: float, alpha: float, x):
    # real z: the two terms are complex conjugates, so their difference over
    # 2i is the imaginary part of one of them
    dm = z - 1j * alpha + np.asarray(x, dtype=float)
    _check_pole(dm, "f_alpha")
    return (cmath.exp(1j * alpha) / dm).imag * np.exp(-np.asarray(x, dtype=float)) / math.pi


def g_alpha(z: complex, alpha: float, x):
    """Integrand of the finite part: ``(alpha/2 pi) e^{i alpha x} / (i alpha x - z)``."""
    x = np.asarray(x, dtype=complex)
    den = 1j * alpha * x - z
    _check_pole(den, "g_alpha")
    val = alpha / TWO_PI * np.exp(1j * alpha * x) / den
    return val[()] if val.ndim == 0 else val


def approx_I(z: complex, alpha: float, n: int, h: float, *, real_path: bool = False) -> complex:
    """DE trapezoid approximation ``h sum_{k=-n}^{n} f_alpha(z, phi(kh)) phi'(kh)``."""
    rule = de_rule(n, h)
    if real_path:
        if complex(z).imag != 0:
            raise ParameterDomainError("the real-z path needs Im z == 0")
        vals = _f_alpha_real(complex(z).real, alpha, rule.x)
    else:
        vals = f_alpha(z, alpha, rule.x)
    return complex(pairwise_sum(list(rule.w * vals)))


def approx_J(z: complex, alpha: float, N: int) -> complex:
    """Gauss-Legendre approximation ``sum_i w_i g_alpha(z, t_i)``."""
    if N < 1:
        raise ParameterDomainError("N must be >= 1")
    rule = gauss_legendre(N)
    return complex(pairwise_sum(list(rule.weights * g_alpha(z, alpha, rule.nodes))))


def exp_scalar(z: complex, params: QuadParams) -> complex:
    """Approximate ``exp(z)`` for ``Re z < 0`` as ``approx_I + approx_J``.

    Real ``z`` takes the shortcut that evaluates only one of the two
    conjugate edge terms.
    """
    z = complex(z)
    if not z.real < 0:
        raise ParameterDomainError(f"Re z must be negative, got {z}; shift the argument first")
    if not params.alpha > abs(z.imag):
        raise ParameterDomainError(f"alpha={params.alpha} must exceed |Im z|={abs(z.imag)}")
    real = z.imag == 0
    val = approx_I(z, params.alpha, params.n, params.h, real_path=real) + approx_J(
        z, params.alpha, params.N
    )
    return val


def K_constant(z: complex, alpha: float, d: float) -> float:
    """``(1/pi) / ((alpha - |Im z| - 2pi) cos d - (|Re z| + log 2) sin d)``.

    Returns ``inf`` when the denominator is not positive (``d`` at or past
    the edge of its window).
    """
    z = complex(z)
    den = (alpha - abs(z.imag) - TWO_PI) * math.cos(d) - (-z.real + LOG2) * math.sin(d)
    if den <= 0:
        return math.inf
    return (1 / math.pi) / den


def bound_I(z: complex, alpha: float, d: float, n: int) -> float:
    """DE error bound without its unknown factor ``c_d``.

    ``K_{z,alpha,d} exp(-2 pi d n / log(4dn))``; the true bound is ``c_d``
    times this value. Raises if ``(alpha, d, n)`` is outside the admissible
    window.
    """
    z = complex(z)
    if not z.real < 0:
        raise ParameterDomainError("Re z must be negative")
    if not alpha > abs(z.imag) + TWO_PI:
        raise ParameterDomainError("alpha must exceed |Im z| + 2pi")
    edge = math.atan((alpha - abs(z.imag) - TWO_PI) / (-z.real + LOG2))
    if not 0 < d < edge:
        raise ParameterDomainError(f"d={d} outside (0, {edge})")
    if not n > 1 / (4 * d):
        raise ParameterDomainError("n must exceed 1/(4d)")
    K = K_constant(z, alpha, d)
    return K * math.exp(-TWO_PI * d * n / math.log(4 * d * n))


def bound_J(z: complex, alpha: float, delta: float, N: int) -> float:
    """Explicit Gauss-Legendre error bound.

    ``32 exp(|Re z|) / (15 pi delta) * rho^{-2(N-1)} / (rho^2 - 1)``.
    """
    z = complex(z)
    if not z.real < 0:
        raise ParameterDomainError("Re z must be negative")
    if not alpha > abs(z.imag):
        raise ParameterDomainError("alpha must exceed |Im z|")
    if not 0 < delta < -z.real / alpha:
        raise ParameterDomainError(f"delta={delta} outside (0, {-z.real / alpha})")
    if N < 2:
        raise ParameterDomainError("N must be >= 2")
    r = rho(-z.real, alpha, delta)
    if r * r - 1 <= 0:
        return math.inf
    return 32 * math.exp(-z.real) / (15 * math.pi * delta) * r ** (-2 * (N - 1)) / (r * r - 1)
