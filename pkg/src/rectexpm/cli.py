"""``expm`` command-line entry point.

Exit codes: 0 success, 2 parameter-domain error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import REGIONS, emit, gen_test_matrix, run_convergence
from .errors import ExpmError, NumericalFailure, ParameterDomainError
from .linalg import mm_read, mm_write
from .matexp import expm, expm_action, expm_shifted, gershgorin_envelope
from .params import SpectralEnvelope, make_params

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("rectexpm")


def load_config(path) -> dict:
    """Read a JSON or TOML benchmark configuration (chosen by suffix, JSON otherwise)."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def _envelope_from_args(args, A):
    if args.im is None and args.re_min is None and args.re_max is None:
        return None
    if None in (args.im, args.re_min, args.re_max):
        raise ParameterDomainError("--im, --re-min and --re-max must be given together")
    return SpectralEnvelope(args.im, args.re_min, args.re_max)


def cmd_compute(args) -> int:
    A = mm_read(args.matrix)
    shift = args.shift or 0.0
    env = _envelope_from_args(args, A)
    if env is None:
        env = gershgorin_envelope(np.asarray(A) - shift * np.eye(A.shape[0]))
    params = make_params(env, args.n, args.k, safety=args.safety, alpha=args.alpha, d=args.d)
    kw = {"envelope": env, "workers": args.workers, "backend": args.backend}
    if args.action:
        b = mm_read(args.action).reshape(-1)
        if shift:
            val = np.exp(shift) * expm_action(A - shift * np.eye(A.shape[0]), b, params, **kw)
        else:
            val = expm_action(A, b, params, **kw)
        mm_write(args.out, val.reshape(-1, 1), comment="exp(A) b")
    else:
        res = expm_shifted(A, params, shift, **kw) if shift else expm(A, params, **kw)
        val = res.value
        b = res.diagnostics.get("bounds")
        if b is not None:
            log.info("bound constants: ell=%.6g rho=%.6g C=%.6g", b.ell, b.rho, b.C)
        mm_write(args.out, val, comment="exp(A)")
    log.info("alpha=%.10g d=%.10g h=%.10g n=%d N=%d resolvents=%d",
             params.alpha, params.d, params.h, params.n, params.N, params.resolvents)
    return EXIT_OK


def cmd_gen(args) -> int:
    tm = gen_test_matrix(args.m, REGIONS[args.region], args.seed, complex_mode=args.complex)
    mm_write(args.out, tm.A, comment=f"region={args.region} seed={args.seed} m={args.m}")
    if args.eigs_out:
        mm_write(args.eigs_out, tm.D.reshape(-1, 1), comment="eigenvalues")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    if args.workers is not None:
        config["workers"] = args.workers
    if args.timing:
        config["timing"] = True
    records = run_convergence(config)
    csv_path, script = emit(records, args.out)
    log.info("wrote %s and %s", csv_path, script)
    return EXIT_OK


def cmd_params(args) -> int:
    env = SpectralEnvelope(args.im, args.re_min, args.re_max)
    p = make_params(env, args.n, args.k, safety=args.safety, alpha=args.alpha, d=args.d,
                    rigorous=args.rigorous)
    print(f"alpha = {p.alpha:.10g}")
    print(f"d     = {p.d:.10g}")
    print(f"h     = {p.h:.10g}")
    print(f"n     = {p.n}")
    print(f"N     = {p.N}")
    print(f"delta = {p.delta:.10g}")
    print(f"resolvents = {p.resolvents}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="expm", description="Matrix exponential by rectangular-contour quadrature.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    def param_flags(p, n_required):
        p.add_argument("--n", type=int, required=n_required, default=None if n_required else 60)
        p.add_argument("--k", type=float, default=4.0)
        p.add_argument("--alpha", type=float)
        p.add_argument("--d", type=float)
        p.add_argument("--safety", type=float, default=0.99)

    c = sub.add_parser("compute", help="exp(A) or exp(A) b for a Matrix Market matrix")
    c.add_argument("--matrix", required=True)
    c.add_argument("--out", required=True)
    param_flags(c, True)
    c.add_argument("--shift", type=float)
    c.add_argument("--action", help="Matrix Market vector b")
    c.add_argument("--im", type=float, help="envelope max |Im|")
    c.add_argument("--re-min", type=float, help="envelope min |Re|")
    c.add_argument("--re-max", type=float, help="envelope max |Re|")
    c.add_argument("--workers", type=int)
    c.add_argument("--backend", choices=["native", "lapack"], default="native")
    c.set_defaults(fn=cmd_compute)

    g = sub.add_parser("gen", help="write a seeded test matrix")
    g.add_argument("--m", type=int, default=20)
    g.add_argument("--region", choices=sorted(REGIONS), required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--complex", action="store_true", help="sample eigenvalues freely (complex A)")
    g.add_argument("--eigs-out", help="also write the eigenvalues")
    g.set_defaults(fn=cmd_gen)

    b = sub.add_parser("bench", help="run a convergence sweep")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--workers", type=int)
    b.add_argument("--timing", action="store_true", help="record wall time (makes output run-dependent)")
    b.set_defaults(fn=cmd_bench)

    p = sub.add_parser("params", help="print the parameters chosen for an envelope")
    p.add_argument("--im", type=float, required=True)
    p.add_argument("--re-min", type=float, required=True)
    p.add_argument("--re-max", type=float, required=True)
    param_flags(p, False)
    p.add_argument("--rigorous", action="store_true", help="size d from the worst envelope corner")
    p.set_defaults(fn=cmd_params)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.fn(args)
    except ParameterDomainError as exc:
        print(f"expm: parameter error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalFailure as exc:
        print(f"expm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        # scipy's Matrix Market parser reports malformed files as ValueError
        print(f"expm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ExpmError as exc:  # pragma: no cover
        print(f"expm: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
