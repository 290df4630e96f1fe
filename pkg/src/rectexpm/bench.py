"""Test-matrix generation and convergence sweeps.

Test matrices are ``A = Q D Q^H`` with a seeded random orthogonal rotation and
eigenvalues drawn uniformly from a rectangular region of the left
half-plane. Random numbers come from numpy's ``PCG64`` bit generator
(``numpy.random.default_rng(seed)``), so seeds are reproducible within this
implementation only.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .baselines import fixed_talbot_scale, laguerre_I, talbot_expm
from .errors import ExpmError, ParameterDomainError
from .matexp import de_part, expm
from .params import SpectralEnvelope, make_params, solve_alpha
from .scalar import approx_J

__all__ = [
    "SpectrumRegion",
    "REGIONS",
    "region_by_name",
    "TestMatrix",
    "gen_test_matrix",
    "reference_expm",
    "reference_I",
    "ConvergenceRecord",
    "METHODS",
    "RESERVED_METHODS",
    "run_convergence",
    "emit",
    "parse_csv",
]


@dataclass(frozen=True)
class SpectrumRegion:
    re_range: tuple[float, float]
    im_range: tuple[float, float]

    def __post_init__(self):
        re_lo, re_hi = self.re_range
        im_lo, im_hi = self.im_range
        if not re_lo <= re_hi < 0:
            raise ParameterDomainError(f"need re_lo <= re_hi < 0, got {self.re_range}")
        if not im_lo <= im_hi:
            raise ParameterDomainError(f"need im_lo <= im_hi, got {self.im_range}")

    @property
    def is_real(self) -> bool:
        return self.im_range == (0.0, 0.0) or self.im_range == (0, 0)

    def envelope(self) -> SpectralEnvelope:
        re_lo, re_hi = self.re_range
        return SpectralEnvelope(max(abs(self.im_range[0]), abs(self.im_range[1])), -re_hi, -re_lo)


REGIONS = {
    "omega1": SpectrumRegion((-100.0, -5.0), (0.0, 0.0)),
    "omega2": SpectrumRegion((-100.0, -5.0), (-10.0, 10.0)),
    "omega3": SpectrumRegion((-100.0, -5.0), (-100.0, 100.0)),
    "omega4": SpectrumRegion((-100.0, -5.0), (-1000.0, 1000.0)),
}


def region_by_name(name: str) -> SpectrumRegion:
    try:
        return REGIONS[name]
    except KeyError:
        raise ParameterDomainError(f"unknown region {name!r}; choose from {sorted(REGIONS)}") from None


class TestMatrix(NamedTuple):
    """``A = Q diag(D) Q^H`` with ``Q`` unitary.

    ``Q`` is real orthogonal for real spectra and in complex mode. For a real
    ``A`` with conjugate eigenvalue pairs it is the rotation times the unitary
    eigenbasis of the 2x2 real blocks, hence complex.
    """

    A: np.ndarray
    D: np.ndarray
    Q: np.ndarray

    __test__ = False


def _random_orthogonal(rng, m):
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


_V = np.array([[1, 1], [1j, -1j]]) / math.sqrt(2)


def gen_test_matrix(m: int, region: SpectrumRegion | str, seed: int, *, complex_mode: bool = False) -> TestMatrix:
    """Seeded test matrix with spectrum uniform on ``region``."""
    if isinstance(region, str):
        region = region_by_name(region)
    if int(m) != m or m < 1:
        raise ParameterDomainError(f"m must be a positive integer, got {m}")
    m = int(m)
    rng = np.random.default_rng(seed)
    Q = _random_orthogonal(rng, m)
    (re_lo, re_hi), (im_lo, im_hi) = region.re_range, region.im_range
    if region.is_real:
        lam = rng.uniform(re_lo, re_hi, m).astype(complex)
        A = (Q * lam.real) @ Q.T
        A = (A + A.T) / 2  # exact symmetry
        return TestMatrix(np.asfortranarray(A), lam, Q)
    if complex_mode:
        lam = rng.uniform(re_lo, re_hi, m) + 1j * rng.uniform(im_lo, im_hi, m)
        A = (Q * lam) @ Q.T
        return TestMatrix(np.asfortranarray(A), lam, Q.astype(complex))
    if m % 2:
        raise ParameterDomainError("a real matrix with a complex spectrum needs even m (conjugate pairs)")
    p = m // 2
    a = rng.uniform(re_lo, re_hi, p)
    b = rng.uniform(im_lo, im_hi, p)
    B = np.zeros((m, m))
    U = np.zeros((m, m), dtype=complex)
    lam = np.empty(m, dtype=complex)
    for j in range(p):
        s = slice(2 * j, 2 * j + 2)
        B[s, s] = [[a[j], b[j]], [-b[j], a[j]]]
        U[s, s] = _V
        lam[2 * j] = a[j] + 1j * b[j]
        lam[2 * j + 1] = a[j] - 1j * b[j]
    A = Q @ B @ Q.T
    return TestMatrix(np.asfortranarray(A), lam, Q @ U)


def _spectral_function(f, D, Q) -> np.ndarray:
    D = np.asarray(D)
    lam = np.diag(D) if D.ndim == 2 else D
    Q = np.asarray(Q)
    return (Q * f(lam)) @ Q.conj().T


def reference_expm(D, Q) -> np.ndarray:
    """``Q exp(D) Q^H``; ``D`` is a diagonal matrix or the vector of its entries."""
    return _spectral_function(np.exp, D, Q)


def reference_I(D, Q, alpha: float, N: int | None = None) -> np.ndarray:
    """Reference semi-infinite part ``exp(A) - J_alpha(A)``.

    ``J_alpha`` is evaluated per eigenvalue with a Gauss-Legendre rule long
    enough to be converged to rounding.
    """
    if N is None:
        N = max(400, int(4 * alpha))

    def f(lam):
        return np.array([np.exp(z) - approx_J(z, alpha, N) for z in lam])

    return _spectral_function(f, D, Q)


@dataclass(frozen=True)
class ConvergenceRecord:
    method: str
    n: int
    N: int
    k: float
    alpha: float
    d: float
    resolvents: int
    err2: float
    wall_ns: int
    matrix: str = ""


METHODS = ("proposed", "talbot", "fixed_talbot", "laguerre_I", "de_I")
# tags kept free for results merged from other implementations
RESERVED_METHODS = ("tatsuoka_de",)

_NAN = float("nan")


def _err2(X, ref) -> float:
    E = np.asarray(X) - ref
    if not np.all(np.isfinite(E)):
        return math.inf
    # scale first: the SVD can stall on entries near the overflow threshold
    s = float(np.max(np.abs(E)))
    if s == 0.0:
        return 0.0
    return float(np.linalg.norm(E / s, 2)) * s


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _proposed_tasks(entry, env):
    ks = _as_list(entry.get("k", 4))
    out = []
    for k in ks:
        alphas = entry.get("alpha")
        if alphas is None:
            alphas = [solve_alpha(env, ak) for ak in _as_list(entry.get("alpha_k", k))]
        for alpha in _as_list(alphas):
            for n in _as_list(entry["n"]):
                out.append({"k": float(k), "alpha": float(alpha), "n": int(n)})
    return out


def _grid(entry, env):
    method = entry["method"]
    if method in RESERVED_METHODS:
        raise ParameterDomainError(f"method tag {method!r} is reserved for external results")
    if method not in METHODS:
        raise ParameterDomainError(f"unknown method {method!r}")
    if method in ("proposed", "de_I"):
        return _proposed_tasks(entry, env)
    if method in ("talbot", "fixed_talbot"):
        return [{"M": int(M)} for M in _as_list(entry["M"])]
    alphas = entry.get("alpha")
    if alphas is None:
        alphas = [solve_alpha(env, ak) for ak in _as_list(entry.get("alpha_k", 4))]
    return [{"alpha": float(a), "N": int(N)} for a in _as_list(alphas) for N in _as_list(entry["N"])]


def _run_point(ctx, entry, point):
    method = entry["method"]
    A, ref, env, name = ctx["A"], ctx["ref"], ctx["env"], ctx["name"]
    backend = entry.get("backend", ctx["backend"])
    n = N = 0
    k = alpha = d = _NAN
    resolvents = 0
    t0 = time.perf_counter_ns()
    try:
        if method in ("proposed", "de_I"):
            n, k, alpha = point["n"], point["k"], point["alpha"]
            p = make_params(env, n, k, safety=entry.get("safety", 0.99), alpha=alpha,
                            d=entry.get("d"), rigorous=entry.get("rigorous", False))
            d, N = p.d, p.N
            if method == "proposed":
                res = expm(A, p, envelope=env, backend=backend, with_bounds=False)
                resolvents, X = res.resolvent_count, res.value
            else:
                X, resolvents = de_part(A, p.alpha, p.n, p.h, backend=backend)
                N = 0
                ref = ctx["ref_I"](alpha)
        elif method in ("talbot", "fixed_talbot"):
            n = point["M"]
            kind = "optimized" if method == "talbot" else "fixed"
            X, resolvents = talbot_expm(A, n, kind, envelope=env, scale=entry.get("scale"), backend=backend)
        else:
            N, alpha = point["N"], point["alpha"]
            X, resolvents = laguerre_I(A, alpha, N, backend=backend)
            ref = ctx["ref_I"](alpha)
        err = _err2(X, ref)
    except (ExpmError, ValueError, ArithmeticError):
        err = _NAN
    wall = time.perf_counter_ns() - t0 if ctx["timing"] else 0
    return ConvergenceRecord(method, int(n), int(N), float(k), float(alpha), float(d),
                             int(resolvents), float(err), int(wall), name)


def run_convergence(config: dict) -> list[ConvergenceRecord]:
    """Run every (matrix, method, grid point) of ``config``.

    ``config`` keys: ``seed``, ``m`` (default 20), ``complex``, ``workers``,
    ``timing`` (record wall time; off by default so output is reproducible),
    ``backend``, ``matrices`` (region names) and ``methods``, a list of
    tables each with a ``method`` tag and its grid: ``n`` (with ``k``,
    ``alpha`` or ``alpha_k``, ``safety``, ``d``, ``rigorous``) for
    ``proposed`` and ``de_I``; ``M`` (and ``scale``) for the Talbot variants;
    ``N`` (with ``alpha`` or ``alpha_k``) for ``laguerre_I``.
    """
    seed = int(config.get("seed", 0))
    m = int(config.get("m", 20))
    workers = int(config.get("workers", 1))
    tasks = []
    for mi, name in enumerate(_as_list(config.get("matrices", ["omega1"]))):
        region = region_by_name(name) if isinstance(name, str) else SpectrumRegion(**name)
        label = name if isinstance(name, str) else f"region{mi}"
        tm = gen_test_matrix(m, region, seed + mi, complex_mode=bool(config.get("complex", False)))
        env = region.envelope()
        ref_cache = {}

        def ref_I(alpha, tm=tm, cache=ref_cache):
            if alpha not in cache:
                cache[alpha] = reference_I(tm.D, tm.Q, alpha)
            return cache[alpha]

        ctx = {"A": tm.A, "ref": reference_expm(tm.D, tm.Q), "env": env, "name": label,
               "ref_I": ref_I, "timing": bool(config.get("timing", False)),
               "backend": config.get("backend", "native")}
        for entry in config.get("methods", [{"method": "proposed", "n": list(range(5, 65, 5))}]):
            for point in _grid(entry, env):
                tasks.append((ctx, entry, point))
    # references are filled before the pool starts so workers only read them
    for ctx, entry, point in tasks:
        if entry["method"] in ("de_I", "laguerre_I"):
            ctx["ref_I"](point["alpha"])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(lambda t: _run_point(*t), tasks))
    return [_run_point(*t) for t in tasks]


_FIELDS = [f.name for f in fields(ConvergenceRecord)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


_PLOT_SCRIPT = '''"""Plot log10 error against resolvent count for {csv_name}."""
import csv
import math
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
curves = defaultdict(list)
with open(path, newline="") as fh:
    for row in csv.DictReader(fh):
        err = float(row["err2"])
        if not math.isfinite(err) or err <= 0:
            continue
        label = row["method"]
        if row["method"] in ("proposed", "de_I", "laguerre_I"):
            label += " k=%s alpha=%.4g" % (row["k"], float(row["alpha"]))
        curves[(row["matrix"], label)].append((int(row["resolvents"]), err))

panels = sorted({{key[0] for key in curves}})
fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
for ax, panel in zip(axes[0], panels):
    for (mat, label), pts in sorted(curves.items()):
        if mat != panel:
            continue
        pts.sort()
        ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker=".", label=label)
    ax.set_title(panel)
    ax.set_xlabel("resolvent calculations")
    ax.set_ylabel("2-norm error")
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def emit(records, path) -> tuple[Path, Path]:
    """Write ``records`` as CSV plus a matplotlib script that plots them."""
    records = list(records)
    if not records:
        raise ParameterDomainError("no records to emit")
    path = Path(path)
    script = path.with_suffix(".plot.py")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(_FIELDS)
            for r in records:
                w.writerow([_fmt(v) for v in astuple(r)])
        script.write_text(_PLOT_SCRIPT.format(csv_name=path.name))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write benchmark output: {exc.strerror}", str(exc.filename)) from exc
    return path, script


def parse_csv(path) -> list[ConvergenceRecord]:
    types = {f.name: f.type for f in fields(ConvergenceRecord)}
    conv = {"str": str, "int": int, "float": float}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ConvergenceRecord(**{k: conv[types[k]](v) for k, v in row.items()}))
    return out
