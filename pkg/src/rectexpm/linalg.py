"""Dense complex linear algebra used for resolvent evaluation.

Matrices are plain ``complex128`` numpy arrays in Fortran (column-major)
order. The LU kernel is written out here rather than delegated so that its
behaviour (pivoting rule, singularity threshold) is fixed; ``backend="lapack"``
switches to SciPy's LAPACK wrappers for large problems.

The resolvent solve is the only seam the matrix exponential needs, so a
sparse or iterative solver can be substituted by providing any object with a
``solve(B)`` method (see :func:`factorize`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericalFailure, ParameterDomainError, SingularMatrixError

__all__ = [
    "as_matrix",
    "LuFactor",
    "lu_factor",
    "solve",
    "det",
    "factorize",
    "norm2",
    "normF",
    "InverseNormReport",
    "check_inverse_norm_lemmas",
    "mm_read",
    "mm_write",
]

_EPS = np.finfo(float).eps


def as_matrix(A) -> np.ndarray:
    """Validate and convert to a square, finite, column-major complex array."""
    M = np.asarray(A)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParameterDomainError(f"expected a square matrix, got shape {M.shape}")
    M = np.asfortranarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise ParameterDomainError("matrix has non-finite entries")
    return M


@dataclass(frozen=True)
class LuFactor:
    """Packed ``P A = L U`` with unit-diagonal ``L`` stored below the diagonal.

    ``perm[i]`` is the original row now in position ``i``; ``sign`` is the
    parity of that permutation.
    """

    lu: np.ndarray
    perm: np.ndarray
    sign: float

    @property
    def m(self) -> int:
        return self.lu.shape[0]

    def L(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.m)

    def U(self) -> np.ndarray:
        return np.triu(self.lu)

    def P(self) -> np.ndarray:
        return np.eye(self.m)[self.perm]

    def solve(self, B) -> np.ndarray:
        return solve(self, B)


def lu_factor(A) -> LuFactor:
    """Gaussian elimination with partial (row) pivoting."""
    a = np.array(as_matrix(A), order="F", copy=True)
    m = a.shape[0]
    perm = np.arange(m)
    sign = 1.0
    scale = np.max(np.abs(a)) if m else 0.0
    thresh = m * _EPS * scale
    for j in range(m):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) <= thresh or a[p, j] == 0:
            raise SingularMatrixError(
                f"matrix is numerically singular (pivot {abs(a[p, j]):.3e} at column {j})"
            )
        if p != j:
            a[[j, p], :] = a[[p, j], :]
            perm[[j, p]] = perm[[p, j]]
            sign = -sign
        a[j + 1 :, j] /= a[j, j]
        a[j + 1 :, j + 1 :] -= np.outer(a[j + 1 :, j], a[j, j + 1 :])
    return LuFactor(a, perm, sign)


def solve(lu: LuFactor, B) -> np.ndarray:
    """Solve ``A X = B`` for a vector or a block of right-hand sides."""
    B = np.asarray(B, dtype=complex)
    vec = B.ndim == 1
    X = np.array(B[lu.perm].reshape(lu.m, -1), order="C", copy=True)
    a = lu.lu
    m = lu.m
    for i in range(1, m):
        X[i] -= a[i, :i] @ X[:i]
    for i in range(m - 1, -1, -1):
        if i + 1 < m:
            X[i] -= a[i, i + 1 :] @ X[i + 1 :]
        X[i] /= a[i, i]
    return X[:, 0] if vec else X


def det(lu: LuFactor) -> complex:
    return complex(lu.sign * np.prod(np.diag(lu.lu)))


class _LapackLu:
    def __init__(self, A):
        import scipy.linalg as sla

        self._sla = sla
        with warnings.catch_warnings():
            # singularity is reported below with our own exception
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self._f = sla.lu_factor(A, check_finite=False)
        piv = np.abs(np.diag(self._f[0]))
        if np.min(piv) <= A.shape[0] * _EPS * np.max(np.abs(A)):
            raise SingularMatrixError("matrix is numerically singular")

    def solve(self, B):
        return self._sla.lu_solve(self._f, B, check_finite=False)


def factorize(A, backend: str = "native"):
    """Return an object with ``solve(B)`` for the matrix ``A``."""
    if backend == "native":
        return lu_factor(A)
    if backend == "lapack":
        return _LapackLu(as_matrix(A))
    raise ParameterDomainError(f"unknown linear-algebra backend {backend!r}")


def normF(A) -> float:
    return float(np.sqrt(np.sum(np.abs(np.asarray(A)) ** 2)))


def norm2(A, tol: float = 1e-10, maxiter: int = 5000) -> float:
    """Largest singular value by power iteration on ``A^H A``.

    Stops when successive estimates agree to ``tol`` relative. On failure a
    :class:`NumericalFailure` carrying the partial estimate is raised.
    """
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = A @ v
        s = float(np.linalg.norm(w))
        if s == 0.0:
            return 0.0
        u = A.conj().T @ w
        nu = np.linalg.norm(u)
        v = u / nu
        if abs(s - est) <= tol * s:
            return s
        est = s
    err = NumericalFailure(f"power iteration did not converge; partial estimate {est:.6e}")
    err.estimate = est
    raise err


@dataclass(frozen=True)
class InverseNormReport:
    """Both sides of ``||T^-1|| <= gamma ||T||^(m-1) / |det T|`` for the 2- and Frobenius norms."""

    m: int
    lhs_2: float
    rhs_2: float
    lhs_F: float
    rhs_F: float

    # power iteration underestimates norms by up to its tolerance, which
    # matters only when the inequality is tight (e.g. unitary T)
    rtol: float = 1e-8

    @property
    def ok_2(self) -> bool:
        return self.lhs_2 <= self.rhs_2 * (1 + self.rtol)

    @property
    def ok_F(self) -> bool:
        return self.lhs_F <= self.rhs_F * (1 + self.rtol)

    @property
    def ok(self) -> bool:
        return self.ok_2 and self.ok_F

    @property
    def slack_2(self) -> float:
        return self.rhs_2 - self.lhs_2

    @property
    def slack_F(self) -> float:
        return self.rhs_F - self.lhs_F


def check_inverse_norm_lemmas(T) -> InverseNormReport:
    T = as_matrix(T)
    m = T.shape[0]
    f = lu_factor(T)
    Tinv = solve(f, np.eye(m))
    adet = abs(det(f))
    if adet == 0:
        raise SingularMatrixError("T is singular")
    n2 = norm2(T)
    nF = normF(T)
    # logs keep ||T||^(m-1)/|det T| finite for moderately large m
    rhs_2 = math.exp((m - 1) * math.log(n2) - math.log(adet))
    rhs_F = math.sqrt(m) * math.exp((m - 1) * math.log(nF) - math.log(adet))
    return InverseNormReport(m, norm2(Tinv), rhs_2, normF(Tinv), rhs_F)


def mm_read(path) -> np.ndarray:
    """Read a Matrix Market file (array or coordinate; real, integer or complex)."""
    import scipy.io
    import scipy.sparse

    path = Path(path)
    M = scipy.io.mmread(str(path))
    if scipy.sparse.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return np.asfortranarray(M, dtype=complex)
    return np.asfortranarray(M, dtype=float)


def mm_write(path, A, comment: str = "") -> None:
    """Write ``A`` in complex array format with 17 significant digits."""
    import scipy.io

    A = np.asarray(A, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    # an open handle stops scipy from appending ".mtx" to the name
    with open(path, "wb") as fh:
        scipy.io.mmwrite(fh, A, comment=comment, field="complex", precision=17)
