"""Command-line interface: ``flagsdp generate|optimize|export-sdp|verify|density``.

Exit codes: 0 success, 1 solve or verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

from . import certfile, problem
from .constructions import blowup_vector
from .errors import (
    ConstructionError,
    FlagError,
    FormatError,
    RoundingError,
    SolverError,
    TheoryError,
    VerificationError,
)
from .flags import render
from .rounding import verify
from .sdp import MAXIMIZE, assemble, describe_bound, export_sdpa
from .theory import BUILTIN_THEORIES
from .workflow import optimize

log = logging.getLogger("flagsdp")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _setup_logging(verbosity: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)


def _theory_from_args(args):
    if getattr(args, "problem", None):
        theory = problem.load(args.problem).theory
    else:
        name = args.theory or "Graph"
        if name not in BUILTIN_THEORIES:
            raise _UsageError(f"unknown theory {name!r}; known: {', '.join(sorted(BUILTIN_THEORIES))}")
        theory = BUILTIN_THEORIES[name]
    excl = [problem.parse_item(x, theory) for x in getattr(args, "exclude", None) or []]
    return theory.exclude(excl) if excl else theory


def _load_problem(path):
    prob = problem.load(path)
    if prob.target is None or prob.n is None:
        raise FormatError(f"{path}: [problem] needs 'target' and 'n'")
    return prob


# -- subcommands --------------------------------------------------------------------------


def cmd_generate(args) -> int:
    theory = _theory_from_args(args)
    ftype = None
    if args.ftype:
        ftype = problem.parse_item(args.ftype, theory)
    flags = theory.generate(args.n, ftype).flags
    print(f"{len(flags)} flags")
    if not args.count:
        for f in flags:
            print(render(f))
    return EXIT_OK


def cmd_optimize(args) -> int:
    prob = _load_problem(args.problem)
    exact = prob.exact or args.exact or args.certificate is not None
    cert_path = args.certificate or prob.certificate
    res = optimize(
        prob.theory,
        prob.target,
        args.n or prob.n,
        maximize=prob.sense == MAXIMIZE,
        positives=prob.positives,
        exact=exact,
        denom=args.denom or prob.denom,
        slack_threshold=prob.slack_threshold,
        kernel_denom=prob.kernel_denom,
        construction=prob.construction,
        file=cert_path if exact else None,
        solver=args.solver,
        timeout=args.timeout,
    )
    print(res.report())
    if prob.construction is not None and res.construction_value is not None and res.exact_bound is not None:
        lo, hi = sorted((res.construction_value, res.exact_bound))
        print(f"{describe_bound(lo)} <= optimum <= {describe_bound(hi)}" if prob.sense == MAXIMIZE
              else f"{describe_bound(hi)} >= optimum >= {describe_bound(lo)}")
    return EXIT_OK


def cmd_export(args) -> int:
    prob = _load_problem(args.problem)
    p = assemble(prob.theory, prob.target, args.n or prob.n, prob.sense, prob.positives)
    out = args.output or prob.sdpa
    if out is None:
        raise _UsageError("no output path: pass one or set output.sdpa in the problem file")
    export_sdpa(p, out)
    print(f"wrote {out}: {p.summary()}")
    return EXIT_OK


def cmd_verify(args) -> int:
    theory = _theory_from_args(args)
    try:
        cert = certfile.read(args.certificate)
    except OSError as exc:
        raise _UsageError(f"cannot read certificate: {exc.strerror}") from None
    try:
        bound = verify(cert, theory)
    except VerificationError as exc:
        if args.json:
            print(json.dumps({"status": "rejected", "reason": str(exc), "flag": exc.flag}))
        else:
            print(f"verification failed: {exc}")
        return EXIT_FAIL
    if args.json:
        print(json.dumps({"status": "verified", "bound": str(bound), "sense": cert.sense, "n": cert.n}))
    else:
        word = "upper" if cert.sense == MAXIMIZE else "lower"
        print(f"verified {word} bound: {describe_bound(bound)}")
    return EXIT_OK


def cmd_density(args) -> int:
    prob = problem.load(args.problem) if args.problem else None
    theory = prob.theory if prob else _theory_from_args(args)
    if args.construction:
        try:
            data = json.loads(args.construction)
        except json.JSONDecodeError as exc:
            raise _UsageError(f"--construction is not valid JSON: {exc.msg}") from None
        template = problem.parse_construction(data, theory)
    elif prob is not None and prob.construction is not None:
        template = prob.construction
    else:
        raise _UsageError("no construction: give --construction or a [construction] section")
    if args.target:
        target = problem.parse_expression(args.target, theory)
    elif prob is not None and prob.target is not None:
        target = prob.target
    else:
        raise _UsageError("no target: give --target or problem.target")
    if isinstance(target, Fraction):
        print(describe_bound(target))
        return EXIT_OK
    if target.tkey[0]:
        raise _UsageError("density needs an untyped target; wrap it in project(...)")
    value = target.evaluate(blowup_vector(template, target.n))
    print(describe_bound(value))
    return EXIT_OK


# -- entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flagsdp", description="Flag algebra bounds with exact certificates.")
    ap.add_argument("--threads", type=int, default=None, help="cap on worker threads for linear algebra")
    ap.add_argument("--verbosity", type=int, choices=(0, 1, 2), default=None,
                    help="0 results only, 1 progress, 2 debug")
    ap.add_argument("--solver", default=None, help="external SDPA solver command, run as '<cmd> in.dat-s out.sol'")
    sub = ap.add_subparsers(dest="command", required=True)

    def theory_opts(p, problem_optional=True):
        p.add_argument("--theory", choices=sorted(BUILTIN_THEORIES), help="built-in theory (default Graph)")
        p.add_argument("--exclude", action="append", metavar="LITERAL", help="flag(...) or pattern(...) to exclude")
        if problem_optional:
            p.add_argument("--problem", help="take the theory from this problem file")

    g = sub.add_parser("generate", help="list all flags of a size")
    g.add_argument("n", type=int)
    g.add_argument("--ftype", metavar="LITERAL", help="type as a flag(...) literal with all vertices marked")
    g.add_argument("--count", action="store_true", help="print only the number of flags")
    theory_opts(g)
    g.set_defaults(func=cmd_generate)

    o = sub.add_parser("optimize", help="solve a problem file")
    o.add_argument("problem")
    o.add_argument("--exact", action="store_true", help="round to an exact certificate")
    o.add_argument("--certificate", help="write the certificate here (implies --exact)")
    o.add_argument("--denom", type=int, help="override rounding.denom")
    o.add_argument("-n", type=int, help="override problem.n")
    o.add_argument("--timeout", type=float, default=None, help="external solver timeout in seconds")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("export-sdp", help="write the SDPA sparse file of a problem")
    e.add_argument("problem")
    e.add_argument("output", nargs="?")
    e.add_argument("-n", type=int, help="override problem.n")
    e.set_defaults(func=cmd_export)

    v = sub.add_parser("verify", help="verify a certificate against a theory")
    v.add_argument("certificate")
    v.add_argument("problem", nargs="?", help="problem file whose theory to use")
    v.add_argument("--json", action="store_true", help="print a JSON report")
    theory_opts(v, problem_optional=False)
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("density", help="density of a target in a blow-up construction")
    d.add_argument("problem", nargs="?")
    d.add_argument("--construction", help='template as JSON, e.g. \'{"parts": 2, "edges": [[0,0],[1,1]]}\'')
    d.add_argument("--target", help="target expression")
    theory_opts(d, problem_optional=False)
    d.set_defaults(func=cmd_density)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    verbosity = args.verbosity
    if verbosity is None and getattr(args, "problem", None) and args.command in ("optimize", "export-sdp"):
        try:
            verbosity = problem.load(args.problem).verbosity
        except FlagError:
            verbosity = None
    _setup_logging(1 if verbosity is None else verbosity)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be positive", file=sys.stderr)
            return EXIT_USAGE
        # honoured by BLAS in external solver processes started from here
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        return args.func(args)
    except (_UsageError, FormatError, TheoryError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, RoundingError, VerificationError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except FlagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
