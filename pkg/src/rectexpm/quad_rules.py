"""Quadrature nodes and weights.

Three families are provided:

* the double-exponential (DE) map ``phi(t) = log(1 + exp(pi sinh t))`` of
  ``(-inf, inf)`` onto ``(0, inf)`` together with its trapezoid rule,
* Gauss-Legendre on ``[-1, 1]``,
* Gauss-Laguerre on ``[0, inf)`` with weight function ``exp(-x)``.

Rules are immutable once built and are cached, so they can be shared between
threads and across every resolvent of a matrix computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, NamedTuple

import numpy as np

from .errors import NumericalFailure, ParameterDomainError

__all__ = [
    "DeNode",
    "DeRule",
    "GaussRule",
    "de_transform",
    "de_rule",
    "gauss_legendre",
    "gauss_laguerre",
    "LAGUERRE_MAX_ORDER",
]

# Above this, pi*sinh(t) is large enough that exp() would lose the
# log1p form's accuracy advantage and eventually overflow (near 709).
_SWITCH = 30.0

# Gauss-Laguerre nodes grow like 4N; for N beyond ~180 the largest weights
# exp(-x_i)/... underflow the double range and the rule silently drops
# nodes. Callers may raise the cap explicitly.
LAGUERRE_MAX_ORDER = 200


class DeNode(NamedTuple):
    t: float
    x: float
    w: float


def _phi(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = math.pi * np.sinh(t)
    big = u > _SWITCH
    # exp(-|u|) never overflows; both branches are evaluated on safe inputs
    e = np.exp(-np.abs(u))
    x = np.where(big, u + np.log1p(e), np.log1p(np.where(big, 0.0, np.exp(np.minimum(u, _SWITCH)))))
    # logistic(u) = exp(u) / (1 + exp(u)) in a form that never overflows
    sig = np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    dx = math.pi * np.cosh(t) * sig
    return x, dx


def de_transform(t):
    """Return ``(phi(t), phi'(t))`` for the DE map onto the half line.

    Accepts a scalar or an array; scalars come back as floats.
    """
    arr = np.asarray(t, dtype=float)
    x, dx = _phi(arr)
    if arr.ndim == 0:
        return float(x), float(dx)
    return x, dx


@dataclass(frozen=True)
class DeRule:
    """Trapezoid rule in the DE variable: nodes ``x = phi(kh)``, weights ``h phi'(kh)``."""

    n: int
    h: float
    t: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[DeNode]:
        for t, x, w in zip(self.t, self.x, self.w):
            yield DeNode(float(t), float(x), float(w))

    def __getitem__(self, i: int) -> DeNode:
        return DeNode(float(self.t[i]), float(self.x[i]), float(self.w[i]))

    def integrate(self, f) -> complex:
        """Apply the rule to a vectorised callable ``f(x)``."""
        return complex(np.sum(self.w * f(self.x)))


@lru_cache(maxsize=256)
def de_rule(n: int, h: float) -> DeRule:
    """Build the ``2n+1`` point DE trapezoid rule with spacing ``h``."""
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n!r}")
    if not h > 0 or not math.isfinite(h):
        raise ParameterDomainError(f"h must be positive and finite, got {h!r}")
    n = int(n)
    t = h * np.arange(-n, n + 1, dtype=float)
    x, dx = _phi(t)
    for a in (t, x, dx):
        a.setflags(write=False)
    w = h * dx
    w.setflags(write=False)
    return DeRule(n=n, h=float(h), t=t, x=x, w=w)


@dataclass(frozen=True)
class GaussRule:
    """An ``order``-point Gauss rule.

    For ``kind == "laguerre"`` the ``weights`` belong to the weight-function
    form ``int_0^inf exp(-x) g(x) dx ~ sum w_i g(x_i)``; ``log_weights`` keeps
    the weights that underflow in that form.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    order: int
    log_weights: np.ndarray | None = None

    def integrate(self, g) -> complex:
        return complex(np.sum(self.weights * g(self.nodes)))

    def folded_weights(self) -> np.ndarray:
        """Weights for integrands that already contain ``exp(-x)`` (Laguerre only)."""
        if self.kind != "laguerre":
            raise ValueError("folded weights only make sense for Gauss-Laguerre")
        with np.errstate(over="ignore"):
            return np.exp(self.log_weights + self.nodes)


def _legendre_eval(N: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P_N(x) and P_N'(x) via the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, N + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = N * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=128)
def gauss_legendre(N: int) -> GaussRule:
    """Gauss-Legendre nodes and weights on ``[-1, 1]``.

    Roots of ``P_N`` are found by Newton's method on the recurrence, started
    from the asymptotic guesses ``cos(pi (i - 1/4) / (N + 1/2))``. Only the
    nonnegative half is iterated; the other half is its mirror image, so the
    rule is exactly symmetric.
    """
    if int(N) != N or N < 1:
        raise ParameterDomainError(f"Gauss-Legendre order must be >= 1, got {N!r}")
    N = int(N)
    if N == 1:
        nodes = np.array([0.0])
        weights = np.array([2.0])
    else:
        half = (N + 1) // 2
        i = np.arange(1, half + 1)
        x = np.cos(math.pi * (i - 0.25) / (N + 0.5))
        for _ in range(100):
            p, dp = _legendre_eval(N, x)
            step = p / dp
            x = x - step
            if np.max(np.abs(step)) <= 1e-15:
                break
        else:
            raise NumericalFailure(
                f"Gauss-Legendre Newton iteration did not converge for N={N}"
            )
        _, dp = _legendre_eval(N, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        if N % 2:
            x[-1] = 0.0  # the middle root is exactly zero
            nodes = np.concatenate([-x, x[-2::-1]])
            weights = np.concatenate([w, w[-2::-1]])
        else:
            nodes = np.concatenate([-x, x[::-1]])
            weights = np.concatenate([w, w[::-1]])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GaussRule("legendre", nodes, weights, N)


def _laguerre_scaled(N: int, x: np.ndarray):
    """Return ``L_N(x)/L_N'(x)`` and ``log|L_{N+1}(x)|``.

    The recurrence is rescaled on the fly because ``L_N`` grows like
    ``exp(x/2)`` and overflows for the large nodes of high-order rules.
    """
    p0 = np.ones_like(x)
    p1 = 1.0 - x
    logscale = np.zeros_like(x)
    for k in range(1, N + 1):
        p0, p1 = p1, ((2 * k + 1 - x) * p1 - k * p0) / (k + 1)
        s = np.maximum(np.abs(p1), np.abs(p0))
        big = s > 1e100
        if np.any(big):
            f = np.where(big, s, 1.0)
            p0 = p0 / f
            p1 = p1 / f
            logscale += np.log(f)
    # after the loop p0 ~ L_N, p1 ~ L_{N+1} (common scale factor)
    lN, lN1 = p0, p1
    # L_N'(x) = (N+1) (L_{N+1} - (N+1-x)/(N+1) ... ) rewritten through
    # x L_N' = N L_N - N L_{N-1}; with L_{N+1} instead of L_{N-1}:
    # x L_N' = (N+1) L_{N+1} - (N+1-x) L_N
    dlN = ((N + 1) * lN1 - (N + 1 - x) * lN) / x
    return lN / dlN, np.log(np.abs(lN1)) + logscale


@lru_cache(maxsize=64)
def gauss_laguerre(N: int, max_order: int = LAGUERRE_MAX_ORDER) -> GaussRule:
    """Gauss-Laguerre rule for ``int_0^inf exp(-x) g(x) dx``.

    Initial guesses come from the eigenvalues of the symmetric Jacobi matrix
    (Golub-Welsch); they are then polished by Newton's method on the
    rescaled three-term recurrence. Weights use
    ``w_i = x_i / ((N+1)^2 L_{N+1}(x_i)^2)``, evaluated in log space.

    Orders above ``max_order`` are refused: node computation becomes fragile
    and the weight-function form loses nodes to underflow.
    """
    if int(N) != N or N < 1:
        raise ParameterDomainError(f"Gauss-Laguerre order must be >= 1, got {N!r}")
    N = int(N)
    if N > max_order:
        raise ParameterDomainError(
            f"Gauss-Laguerre order {N} exceeds the cap {max_order}; pass max_order to override"
        )
    if N == 1:
        x = np.array([1.0])
    else:
        from scipy.linalg import eigh_tridiagonal

        k = np.arange(1, N)
        x = eigh_tridiagonal(2.0 * np.arange(N) + 1.0, -k.astype(float), eigvals_only=True)
        # recurrence rounding noise near the smallest root grows roughly
        # linearly with N, which bounds the attainable relative accuracy
        tol = max(1e-14, 4e-15 * N)
        for _ in range(100):
            ratio, _ = _laguerre_scaled(N, x)
            x = x - ratio
            if np.max(np.abs(ratio) / x) <= tol:
                break
        else:
            raise NumericalFailure(f"Gauss-Laguerre root polishing did not converge for N={N}")
    _, loglN1 = _laguerre_scaled(N, x)
    logw = np.log(x) - 2.0 * math.log(N + 1) - 2.0 * loglN1
    w = np.exp(logw)
    for a in (x, w, logw):
        a.setflags(write=False)
    return GaussRule("laguerre", x, w, N, log_weights=logw)
