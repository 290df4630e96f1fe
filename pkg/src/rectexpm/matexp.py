"""Matrix exponential and its action through resolvent quadrature.

``exp(A) ~ h sum_k f_alpha(A, phi(kh)) phi'(kh) + sum_i w_i g_alpha(A, t_i)``

Each DE node needs two shifted solves and each Gauss-Legendre node one, for
``4n + 2 + N`` resolvents in total. All node evaluations are independent;
they may be mapped over a thread pool, and the results are always combined
through the same pairwise reduction tree, so the output does not depend on
the schedule.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._summation import pairwise_sum
from .errors import ParameterDomainError, PoleProximityError, SingularMatrixError, SpectrumError
from .linalg import as_matrix, factorize, norm2, normF
from .params import LOG2, TWO_PI, QuadParams, SpectralEnvelope, make_params, rho
from .quad_rules import de_rule, gauss_legendre

__all__ = [
    "MatExpResult",
    "gershgorin_envelope",
    "f_alpha_mat",
    "g_alpha_mat",
    "de_part",
    "gl_part",
    "expm",
    "expm_action",
    "expm_shifted",
    "bound_constants",
    "BoundConstants",
]

log = logging.getLogger(__name__)


@dataclass
class MatExpResult:
    value: np.ndarray
    resolvent_count: int
    params: QuadParams
    diagnostics: dict = field(default_factory=dict)


def gershgorin_envelope(A) -> SpectralEnvelope:
    """Spectral envelope from the row Gershgorin discs.

    Raises :class:`SpectrumError` if any disc reaches the closed right
    half-plane; the caller then has to supply an envelope.
    """
    A = as_matrix(A)
    diag = np.diag(A)
    radius = np.sum(np.abs(A), axis=1) - np.abs(diag)
    if np.any(diag.real + radius >= 0):
        raise SpectrumError(
            "spectrum not certifiably in the left half-plane (a Gershgorin disc "
            "touches Re >= 0); supply a spectral envelope explicitly"
        )
    max_abs_im = float(np.max(np.abs(diag.imag) + radius))
    min_abs_re = float(np.min(-diag.real - radius))
    max_abs_re = float(np.max(-diag.real + radius))
    return SpectralEnvelope(max_abs_im, max(min_abs_re, np.finfo(float).eps), max_abs_re)


def _identity_rhs(m: int) -> np.ndarray:
    return np.eye(m, dtype=complex)


def _shifted_solve(A, shift: complex, rhs, sign: int, backend: str):
    """Solve ``(shift I + sign A) X = rhs``."""
    m = A.shape[0]
    M = sign * A + shift * np.eye(m)
    try:
        return factorize(M, backend).solve(rhs)
    except SingularMatrixError as exc:
        raise PoleProximityError(f"shifted matrix singular at shift {shift}: {exc}") from exc


def f_alpha_mat(A, alpha: float, x: float, rhs=None, *, backend: str = "native"):
    """``(e^{-x}/2 pi i)(e^{i alpha} ((x - i alpha)I + A)^{-1} - e^{-i alpha} ((x + i alpha)I + A)^{-1}) rhs``."""
    A = as_matrix(A)
    if rhs is None:
        rhs = _identity_rhs(A.shape[0])
    if x < 0:
        raise ParameterDomainError("f_alpha_mat needs x >= 0")
    e = cmath.exp(1j * alpha)
    Sm = _shifted_solve(A, x - 1j * alpha, rhs, 1, backend)
    Sp = _shifted_solve(A, x + 1j * alpha, rhs, 1, backend)
    return math.exp(-x) / (2j * math.pi) * (e * Sm - e.conjugate() * Sp)


def g_alpha_mat(A, alpha: float, x: float, rhs=None, *, backend: str = "native"):
    """``(alpha/2 pi) e^{i alpha x} (i alpha x I - A)^{-1} rhs``."""
    A = as_matrix(A)
    if rhs is None:
        rhs = _identity_rhs(A.shape[0])
    S = _shifted_solve(A, 1j * alpha * x, rhs, -1, backend)
    return alpha / TWO_PI * cmath.exp(1j * alpha * x) * S


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def de_part(A, alpha, n, h, rhs=None, *, real_shortcut=False, workers=None, backend="native"):
    """DE approximation of the semi-infinite integral; returns ``(value, solves)``.

    With ``real_shortcut`` (real ``A`` and real ``rhs`` only) the two shifted
    resolvents at each node are complex conjugates, so one solve and an
    imaginary part suffice.
    """
    A = as_matrix(A)
    if rhs is None:
        rhs = _identity_rhs(A.shape[0])
    rule = de_rule(n, h)
    if real_shortcut:
        if np.any(A.imag != 0) or np.any(np.asarray(rhs).imag != 0):
            raise ParameterDomainError("real_shortcut needs a real matrix and right-hand side")
        e = cmath.exp(1j * alpha)

        def term(i):
            x, w = float(rule.x[i]), float(rule.w[i])
            S = _shifted_solve(A, x - 1j * alpha, rhs, 1, backend)
            return (w * math.exp(-x) / math.pi) * (e * S).imag.astype(complex)

        solves = len(rule)
    else:

        def term(i):
            return float(rule.w[i]) * f_alpha_mat(A, alpha, float(rule.x[i]), rhs, backend=backend)

        solves = 2 * len(rule)
    terms = _map(term, range(len(rule)), workers)
    return pairwise_sum(terms), solves


def gl_part(A, alpha, N, rhs=None, *, workers=None, backend="native"):
    """Gauss-Legendre approximation of the finite integral; returns ``(value, solves)``."""
    A = as_matrix(A)
    if rhs is None:
        rhs = _identity_rhs(A.shape[0])
    rule = gauss_legendre(N)

    def term(i):
        return float(rule.weights[i]) * g_alpha_mat(A, alpha, float(rule.nodes[i]), rhs, backend=backend)

    terms = _map(term, range(N), workers)
    return pairwise_sum(terms), N


def _pole_margin(env: SpectralEnvelope, params: QuadParams) -> float:
    """Distance from every solve shift to the (negated) envelope box."""
    # DE shifts: eigenvalue -x +- i alpha; GL shifts: i alpha t
    de_gap = params.alpha - env.max_abs_im
    gl_gap = env.min_abs_re
    return float(min(de_gap, gl_gap))


def _diagnose(A, params, env, diag):
    if env is None:
        return
    margin = _pole_margin(env, params)
    diag["pole_margin"] = margin
    if margin < 1e-8 * params.alpha:
        warnings.warn(f"pole-distance margin {margin:.3e} is tiny relative to alpha", RuntimeWarning)
    dmax_rig = _safe_dmax(env, params.alpha)
    diag["d_rigorous_max"] = dmax_rig
    diag["d_in_rigorous_window"] = dmax_rig is not None and params.d < dmax_rig
    try:
        diag["bounds"] = bound_constants(A, params, envelope=env)
    except ParameterDomainError as exc:
        diag["bounds"] = None
        diag["bounds_note"] = str(exc)


def _safe_dmax(env, alpha):
    gap = alpha - env.max_abs_im - TWO_PI
    if gap <= 0:
        return None
    return math.atan(gap / (env.max_abs_re + LOG2))


def _run(A, rhs, params, *, envelope, real_shortcut, truncate_imag, workers, backend, with_bounds):
    I, s1 = de_part(A, params.alpha, params.n, params.h, rhs,
                    real_shortcut=real_shortcut, workers=workers, backend=backend)
    J, s2 = gl_part(A, params.alpha, params.N, rhs, workers=workers, backend=backend)
    value = I + J
    diag = {"de_solves": s1, "gl_solves": s2, "I": I, "J": J}
    real_input = not np.any(A.imag) and not np.any(np.asarray(rhs).imag)
    if real_input:
        diag["imag_norm"] = normF(value.imag)
        if truncate_imag:
            value = value.real.copy()
    if with_bounds:
        _diagnose(A, params, envelope, diag)
    return MatExpResult(value, s1 + s2, params, diag)


def _resolve_params(A, params, n, k, envelope, **kw):
    if params is not None:
        return params, envelope
    if n is None:
        raise ParameterDomainError("give either params or n")
    if envelope is None:
        envelope = gershgorin_envelope(A)
    return make_params(envelope, n, k, **kw), envelope


def expm(
    A,
    params: QuadParams | None = None,
    *,
    n: int | None = None,
    k: float = 4,
    envelope: SpectralEnvelope | None = None,
    real_shortcut: bool = False,
    truncate_imag: bool = False,
    workers: int | None = None,
    backend: str = "native",
    with_bounds: bool = True,
    **param_kw,
) -> MatExpResult:
    """Approximate ``exp(A)`` for ``A`` with spectrum in the open left half-plane.

    Pass explicit ``params`` or ``n`` (and optionally ``k``); in the latter
    case parameters are chosen from ``envelope``, falling back to the
    Gershgorin envelope of ``A``.
    """
    A = as_matrix(A)
    params, envelope = _resolve_params(A, params, n, k, envelope, **param_kw)
    return _run(A, _identity_rhs(A.shape[0]), params, envelope=envelope,
                real_shortcut=real_shortcut, truncate_imag=truncate_imag,
                workers=workers, backend=backend, with_bounds=with_bounds)


def expm_action(
    A,
    b,
    params: QuadParams | None = None,
    *,
    n: int | None = None,
    k: float = 4,
    envelope: SpectralEnvelope | None = None,
    real_shortcut: bool = False,
    truncate_imag: bool = False,
    workers: int | None = None,
    backend: str = "native",
    full_output: bool = False,
    **param_kw,
):
    """Approximate ``exp(A) b``; one solve per resolvent instead of ``m``."""
    A = as_matrix(A)
    b = np.asarray(b)
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise ParameterDomainError(f"b must be a vector of length {A.shape[0]}")
    params, envelope = _resolve_params(A, params, n, k, envelope, **param_kw)
    res = _run(A, b.astype(complex), params, envelope=envelope,
               real_shortcut=real_shortcut, truncate_imag=truncate_imag,
               workers=workers, backend=backend, with_bounds=full_output)
    return res if full_output else res.value


def expm_shifted(A, params: QuadParams, sigma: float, **kw) -> MatExpResult:
    """``e^sigma exp(A - sigma I)`` for spectra reaching into ``Re >= 0``.

    ``params`` must be valid for the shifted matrix. The absolute error of
    the shifted computation is amplified by ``e^sigma``.
    """
    A = as_matrix(A)
    if not math.isfinite(sigma):
        raise ParameterDomainError("sigma must be finite")
    res = expm(A - sigma * np.eye(A.shape[0]), params, **kw)
    if sigma != 0:
        res.value = math.exp(sigma) * res.value
        res.diagnostics["I"] = math.exp(sigma) * res.diagnostics["I"]
        res.diagnostics["J"] = math.exp(sigma) * res.diagnostics["J"]
    res.diagnostics["sigma"] = sigma
    res.diagnostics["error_amplification"] = math.exp(sigma)
    if sigma > 0:
        log.warning("shift sigma=%g amplifies the absolute error by e^sigma=%g", sigma, math.exp(sigma))
    return res


@dataclass(frozen=True)
class BoundConstants:
    ell: float
    rho: float
    C: float
    norm: str

    def gl_bound(self, N: int) -> float:
        """Gauss-Legendre error bound ``(64 C / 15) rho^{-2(N-1)} / (rho^2 - 1)``."""
        r = self.rho
        return 64 * self.C / 15 * r ** (-2 * (N - 1)) / (r * r - 1)


def bound_constants(A, params: QuadParams, *, eigenvalues=None, envelope=None, norm: str = "2") -> BoundConstants:
    """Constants of the matrix error bounds.

    ``ell``: the smallest distance between DE poles and the strip image,
    ``min_i (alpha - |Im l_i| - 2pi) cos d - (|Re l_i| + log 2) sin d``.
    ``rho``: Bernstein parameter ``eta/alpha - delta + sqrt((eta/alpha - delta)^2 + 1)``
    with ``eta = min_i |Re l_i|``.
    ``C``: ``gamma / (2 pi delta^m) ((rho + 1/rho)/2 ||I|| + ||A||/alpha)^(m-1) exp(eta)``
    with ``gamma = 1`` (2-norm) or ``sqrt(m)`` (Frobenius).

    Exact ``eigenvalues`` are used when given; otherwise the envelope
    corners stand in for them.
    """
    A = as_matrix(A)
    m = A.shape[0]
    a, d, delta = params.alpha, params.d, params.delta
    if eigenvalues is not None:
        lam = np.asarray(eigenvalues, dtype=complex)
        if np.any(lam.real >= 0):
            raise ParameterDomainError("eigenvalues must lie in the open left half-plane")
        im = np.abs(lam.imag)
        re = -lam.real
        max_im = float(np.max(im))
        ell = float(np.min((a - im - TWO_PI) * math.cos(d) - (re + LOG2) * math.sin(d)))
        eta = float(np.min(re))
    elif envelope is not None:
        max_im = envelope.max_abs_im
        ell = (a - max_im - TWO_PI) * math.cos(d) - (envelope.max_abs_re + LOG2) * math.sin(d)
        eta = envelope.min_abs_re
    else:
        raise ParameterDomainError("bound_constants needs eigenvalues or an envelope")
    if not a > max_im + TWO_PI:
        raise ParameterDomainError("alpha must exceed max|Im l| + 2pi")
    if ell < -1e-12 * a:
        raise ParameterDomainError(f"d={d} is outside the window of the DE error bound (ell={ell:.3e})")
    ell = max(ell, 0.0)
    if not 0 < delta < eta / a:
        raise ParameterDomainError(f"delta={delta} outside (0, {eta / a})")
    r = rho(eta, a, delta)
    if norm == "2":
        gamma, nI, nA = 1.0, 1.0, norm2(A)
    elif norm in ("F", "fro"):
        gamma, nI, nA = math.sqrt(m), math.sqrt(m), normF(A)
        norm = "F"
    else:
        raise ParameterDomainError(f"unknown norm {norm!r}")
    base = (r + 1 / r) / 2 * nI + nA / a
    logC = math.log(gamma / TWO_PI) - m * math.log(delta) + (m - 1) * math.log(base) + eta
    C = math.exp(logC) if logC < 709 else math.inf
    return BoundConstants(ell, r, C, norm)
