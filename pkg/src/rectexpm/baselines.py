"""Comparison methods: Talbot-contour quadrature and Gauss-Laguerre for the DE part.

Both Talbot variants discretise the Bromwich integral

    exp(A) = (1/2 pi i) int_C e^z (zI - A)^{-1} dz

on the cotangent contour

    z(theta) = S * (mu * theta * cot(a * theta) + sigma + i * nu * theta),  -pi < theta < pi,

by the midpoint rule in ``theta``. ``optimized`` scales the contour with the
node count (``S = M``), which gives the fastest convergence until the large
values of ``e^z`` near ``z(0) ~ 0.17 M`` swamp the sum by cancellation.
``fixed`` freezes ``S`` once, from the spectral envelope, so the error
levels off instead of growing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ._summation import pairwise_sum
from .errors import ParameterDomainError
from .linalg import as_matrix
from .matexp import _map, _shifted_solve
from .params import SpectralEnvelope
from .quad_rules import LAGUERRE_MAX_ORDER, gauss_laguerre

__all__ = ["TalbotContour", "WEIDEMAN_CONSTANTS", "talbot_expm", "fixed_talbot_scale", "laguerre_I"]

# Optimised cotangent-contour parameters for t = 1, from J.A.C. Weideman,
# "Optimizing Talbot's contours for the inversion of the Laplace transform",
# SIAM J. Numer. Anal. 44 (2006), as tabulated in Trefethen, Weideman and
# Schmelzer, BIT 46 (2006): z = N(0.5017 th cot(0.6407 th) - 0.6122 + 0.2645 i th).
WEIDEMAN_CONSTANTS = {"sigma": -0.6122, "mu": 0.5017, "a": 0.6407, "nu": 0.2645}


@dataclass(frozen=True)
class TalbotContour:
    kind: str
    M: int
    scale: float
    sigma: float = WEIDEMAN_CONSTANTS["sigma"]
    mu: float = WEIDEMAN_CONSTANTS["mu"]
    a: float = WEIDEMAN_CONSTANTS["a"]
    nu: float = WEIDEMAN_CONSTANTS["nu"]

    def theta(self) -> np.ndarray:
        return -math.pi + (np.arange(self.M) + 0.5) * (2 * math.pi / self.M)

    def z(self, th):
        th = np.asarray(th, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(th == 0, 1.0 / self.a, th / np.tan(self.a * th))
        return self.scale * (self.mu * c + self.sigma + 1j * self.nu * th)

    def dz(self, th):
        th = np.asarray(th, dtype=float)
        s = np.sin(self.a * th)
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.where(th == 0, 0.0, 1.0 / np.tan(self.a * th) - self.a * th / (s * s))
        return self.scale * (self.mu * d + 1j * self.nu)

    def end_real_part(self) -> float:
        """``Re z(+-pi)``; ``e^z`` there is the truncation level of the contour."""
        return float(self.z(math.pi).real)

    def encloses(self, point: complex, margin: float = 0.0) -> bool:
        """Whether ``point`` lies inside the contour (to the left of it) with ``margin``."""
        v = abs(point.imag)
        th = v / (self.scale * self.nu)
        if th >= math.pi:
            return False
        return float(self.z(th).real) >= point.real + margin


def fixed_talbot_scale(env: SpectralEnvelope, base: float = 30.0, margin: float = 1.0) -> float:
    """Smallest contour scale (at least ``base``) enclosing the envelope corner nearest the axis."""
    corner = complex(-env.min_abs_re, env.max_abs_im)
    S = base
    while not TalbotContour("fixed", 2, S).encloses(corner, margin):
        S *= 1.02
        if S > 1e7:  # pragma: no cover
            raise ParameterDomainError("cannot size a Talbot contour around this envelope")
    return S


def talbot_expm(A, M: int, kind: str = "optimized", *, envelope: SpectralEnvelope | None = None,
                scale: float | None = None, workers=None, backend="native"):
    """Midpoint-rule Talbot approximation of ``exp(A)``; returns ``(value, solves)``.

    For real ``A`` and even ``M`` the nodes pair up as complex conjugates and
    only ``M/2`` solves are made.
    """
    A = as_matrix(A)
    if int(M) != M or M < 2:
        raise ParameterDomainError("M must be an integer >= 2")
    M = int(M)
    if kind == "optimized":
        S = float(M) if scale is None else scale
    elif kind == "fixed":
        if scale is None:
            if envelope is None:
                raise ParameterDomainError("fixed Talbot needs an envelope or an explicit scale")
            scale = fixed_talbot_scale(envelope)
        S = scale
    else:
        raise ParameterDomainError(f"unknown Talbot kind {kind!r}")
    c = TalbotContour(kind, M, S)
    th = c.theta()
    zs = c.z(th)
    dzs = c.dz(th)
    m = A.shape[0]
    eye = np.eye(m, dtype=complex)
    real = not np.any(A.imag) and M % 2 == 0
    idx = range(M // 2, M) if real else range(M)

    def term(i):
        R = _shifted_solve(A, complex(zs[i]), eye, -1, backend)
        with np.errstate(over="ignore", invalid="ignore"):
            # overflow for huge contours is left to show up as inf
            return np.exp(zs[i]) * dzs[i] * R

    terms = _map(term, list(idx), workers)
    with np.errstate(over="ignore", invalid="ignore"):
        S_ = pairwise_sum(terms)
        if real:
            # theta and -theta contribute t and -conj(t)
            value = (2.0 / M) * S_.imag.astype(complex)
        else:
            value = S_ / (1j * M)
    return value, len(idx)


def laguerre_I(A_or_z, alpha: float, N: int, *, max_order: int = LAGUERRE_MAX_ORDER,
               workers=None, backend="native"):
    """Gauss-Laguerre approximation of the semi-infinite integral.

    The ``e^{-x}`` factor of the integrand is the Laguerre weight, so only
    the two resolvent terms are sampled. Scalars return a complex number;
    matrices return ``(value, solves)``.
    """
    rule = gauss_laguerre(N, max_order)
    e = cmath.exp(1j * alpha)
    if np.ndim(A_or_z) == 0:
        z = complex(A_or_z)
        x = rule.nodes
        F = (e / (z - 1j * alpha + x) - e.conjugate() / (z + 1j * alpha + x)) / (2j * math.pi)
        return complex(pairwise_sum(list(rule.weights * F)))
    A = as_matrix(A_or_z)
    eye = np.eye(A.shape[0], dtype=complex)

    def term(i):
        x = float(rule.nodes[i])
        Sm = _shifted_solve(A, x - 1j * alpha, eye, 1, backend)
        Sp = _shifted_solve(A, x + 1j * alpha, eye, 1, backend)
        return float(rule.weights[i]) / (2j * math.pi) * (e * Sm - e.conjugate() * Sp)

    terms = _map(term, range(N), workers)
    return pairwise_sum(terms), 2 * N
