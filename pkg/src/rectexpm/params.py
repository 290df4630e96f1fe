"""Parameter selection for the rectangular-contour quadrature.

Everything here is driven by a :class:`SpectralEnvelope`, a conservative box
around the eigenvalues. The contour half-height ``alpha`` balances the decay
rates of the two quadratures; ``d`` is the half-width of the strip in which
the DE integrand is analytic; ``h`` follows from ``d`` and ``n``; ``delta``
fixes the Bernstein ellipse used by the Gauss-Legendre error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NumericalFailure, ParameterDomainError

__all__ = [
    "SpectralEnvelope",
    "QuadParams",
    "d_max",
    "d_select",
    "h_select",
    "alpha_criterion",
    "solve_alpha",
    "delta_select",
    "rho",
    "make_params",
]

TWO_PI = 2.0 * math.pi
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class SpectralEnvelope:
    """Bounds on the spectrum: ``|Im l| <= max_abs_im`` and ``min_abs_re <= |Re l| <= max_abs_re``."""

    max_abs_im: float
    min_abs_re: float
    max_abs_re: float

    def __post_init__(self):
        if not (self.min_abs_re > 0 and math.isfinite(self.min_abs_re)):
            raise ParameterDomainError(
                f"min_abs_re must be positive (spectrum in the open left half-plane), got {self.min_abs_re}"
            )
        if not self.max_abs_re >= self.min_abs_re:
            raise ParameterDomainError("max_abs_re must be >= min_abs_re")
        if not self.max_abs_im >= 0:
            raise ParameterDomainError("max_abs_im must be >= 0")

    @classmethod
    def of_point(cls, z: complex) -> "SpectralEnvelope":
        """The degenerate envelope of a single point ``z`` with ``Re z < 0``."""
        z = complex(z)
        if not z.real < 0:
            raise ParameterDomainError(f"Re z must be negative, got {z}")
        return cls(abs(z.imag), -z.real, -z.real)

    @classmethod
    def of_eigenvalues(cls, eigs) -> "SpectralEnvelope":
        eigs = [complex(e) for e in eigs]
        if any(not e.real < 0 for e in eigs):
            raise ParameterDomainError("all eigenvalues must have negative real part")
        re = [-e.real for e in eigs]
        return cls(max(abs(e.imag) for e in eigs), min(re), max(re))


@dataclass(frozen=True)
class QuadParams:
    alpha: float
    d: float
    h: float
    n: int
    k: float
    N: int
    delta: float

    @property
    def resolvents(self) -> int:
        """Linear solves spent by the matrix method: ``4n+2`` DE plus ``N`` GL."""
        return 4 * self.n + 2 + self.N

    def with_(self, **changes) -> "QuadParams":
        return replace(self, **changes)

    def check(self, env: SpectralEnvelope, *, rigorous: bool = False) -> None:
        """Raise if the bundle violates its invariants for ``env``.

        With ``rigorous=True`` the ``d`` window uses the worst envelope corner
        (largest ``|Re|``), which is what the error theorems require.
        """
        if not self.alpha > env.max_abs_im + TWO_PI:
            raise ParameterDomainError(
                f"alpha={self.alpha} must exceed max|Im|+2pi={env.max_abs_im + TWO_PI}"
            )
        dm = d_max(env, self.alpha, rigorous=rigorous)
        if not 0 < self.d < dm:
            raise ParameterDomainError(f"d={self.d} outside (0, {dm})")
        if not self.n > 1 / (4 * self.d):
            raise ParameterDomainError(f"n={self.n} must exceed 1/(4d)={1 / (4 * self.d)}")
        if not math.isclose(self.h, math.log(4 * self.d * self.n) / self.n, rel_tol=1e-12):
            raise ParameterDomainError("h must equal log(4dn)/n")
        if not 0 < self.delta < env.min_abs_re / self.alpha:
            raise ParameterDomainError(
                f"delta={self.delta} outside (0, {env.min_abs_re / self.alpha})"
            )
        if self.N < 2:
            raise ParameterDomainError("N must be >= 2")


def _re_bound(env: SpectralEnvelope, rigorous: bool) -> float:
    return env.max_abs_re if rigorous else env.min_abs_re


def d_max(env: SpectralEnvelope, alpha: float, *, rigorous: bool = True) -> float:
    """Upper end of the admissible ``d`` window.

    ``arctan((alpha - max|Im| - 2pi) / (|Re| + log 2))``. The rigorous window
    takes ``|Re| = max_abs_re``, the minimum over every point of the
    envelope. ``rigorous=False`` uses ``min_abs_re`` instead, i.e. the point
    nearest the imaginary axis; poles further right are damped by
    ``exp(-x)`` and barely affect the DE sum in practice.
    """
    gap = alpha - env.max_abs_im - TWO_PI
    if not gap > 0:
        raise ParameterDomainError(
            f"alpha={alpha} must exceed max|Im|+2pi={env.max_abs_im + TWO_PI}"
        )
    return math.atan(gap / (_re_bound(env, rigorous) + LOG2))


def d_select(env: SpectralEnvelope, alpha: float, safety: float = 0.99, *, rigorous: bool = True) -> float:
    if not 0 < safety < 1:
        raise ParameterDomainError(f"safety must lie in the open interval (0, 1), got {safety}")
    return safety * d_max(env, alpha, rigorous=rigorous)


def h_select(d: float, n: int) -> float:
    """DE mesh size ``log(4dn)/n``; requires ``n > 1/(4d)``."""
    if not d > 0:
        raise ParameterDomainError(f"d must be positive, got {d}")
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n}")
    if not n > 1 / (4 * d):
        raise ParameterDomainError(f"n={n} must exceed 1/(4d)={1 / (4 * d):.6g}")
    return math.log(4 * d * n) / n


def alpha_criterion(alpha: float, max_abs_im: float, abs_re: float, k: float) -> tuple[float, float]:
    """Both sides of the balance equation for ``alpha``.

    Left: ``sinh((pi/k) arctan((alpha - |Im z| - 2pi)/(|Re z| + log 2)))``,
    the DE rate at the largest admissible ``d``. Right: ``|Re z|/alpha``, the
    Bernstein-ellipse parameter with ``delta`` neglected.
    """
    lhs = math.sinh(math.pi / k * math.atan((alpha - max_abs_im - TWO_PI) / (abs_re + LOG2)))
    return lhs, abs_re / alpha


def solve_alpha(env: SpectralEnvelope, k: float, *, tol: float = 1e-10) -> float:
    """Unique root ``alpha_k > max|Im| + 2pi`` of the balance equation.

    Uses ``|Re z| = min_abs_re`` and ``|Im z| = max_abs_im``. The left side
    increases from 0 and the right side decreases, so the difference changes
    sign exactly once; the root is bracketed by geometric expansion and then
    bisected.
    """
    if not k > 0:
        raise ParameterDomainError(f"k must be positive, got {k}")
    lo = env.max_abs_im + TWO_PI

    def gap(a):
        lhs, rhs = alpha_criterion(a, env.max_abs_im, env.min_abs_re, k)
        return lhs - rhs

    a_lo = lo + 1e-12 * max(1.0, lo)
    step = 1.0
    hi = lo + step
    for _ in range(10**6):
        if gap(hi) > 0:
            break
        a_lo = hi
        step *= 2.0
        hi = lo + step
    else:  # pragma: no cover - monotonicity makes this unreachable
        raise NumericalFailure("could not bracket the root of the alpha balance equation")
    a_hi = hi
    while a_hi - a_lo > tol:
        mid = 0.5 * (a_lo + a_hi)
        if gap(mid) > 0:
            a_hi = mid
        else:
            a_lo = mid
    return 0.5 * (a_lo + a_hi)


def delta_select(env: SpectralEnvelope, alpha: float, fraction: float = 0.5) -> float:
    if not alpha > 0:
        raise ParameterDomainError("alpha must be positive")
    if not 0 < fraction < 1:
        raise ParameterDomainError(f"fraction must lie in (0, 1), got {fraction}")
    return fraction * env.min_abs_re / alpha


def rho(abs_re: float, alpha: float, delta: float) -> float:
    """Bernstein ellipse parameter ``r + sqrt(r^2 + 1)`` with ``r = |Re z|/alpha - delta``."""
    r = abs_re / alpha - delta
    return r + math.sqrt(r * r + 1.0)


def make_params(
    env: SpectralEnvelope,
    n: int,
    k: float = 4,
    safety: float = 0.99,
    fraction: float = 0.5,
    *,
    alpha: float | None = None,
    d: float | None = None,
    rigorous: bool = False,
) -> QuadParams:
    """Assemble a full :class:`QuadParams` bundle.

    ``alpha`` and ``d`` may be pinned by the caller (parameter sweeps);
    otherwise ``alpha`` solves the balance equation and ``d`` is ``safety``
    times the window edge. ``rigorous`` selects the worst-corner ``d`` window
    that the error theorems assume; the default follows the experimental
    protocol, in which the envelope point nearest the imaginary axis sets
    both ``alpha`` and ``d``.
    """
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    if alpha is None:
        alpha = solve_alpha(env, k)
    if d is None:
        d = d_select(env, alpha, safety, rigorous=rigorous)
    h = h_select(d, n)
    N = max(2, int(round(k * n)))
    delta = delta_select(env, alpha, fraction)
    return QuadParams(alpha=float(alpha), d=float(d), h=h, n=n, k=float(k), N=N, delta=delta)
