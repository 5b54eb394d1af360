"""Reference external solver: ``flagsdp-sdpa-solve problem.dat-s problem.sol``.

Solves an SDPA sparse file with cvxopt and writes a CSDP-style solution: the
primal vector on the first line, then ``matno block i j value`` entries for the
slack matrix (matno 1) and the dual matrix (matno 2).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import FormatError
from .sdp import read_sdpa


def solve_sdpa(data, show_progress: bool = False):
    """Solve min c^T x s.t. sum_i x_i F_i - F_0 >= 0; returns (x, slack blocks, dual blocks)."""
    import cvxopt
    from cvxopt import solvers

    m = data.m
    lp_dims = [-s for s in data.block_sizes if s < 0]
    sd_dims = [s for s in data.block_sizes if s > 0]
    # map file block numbers to positions in the LP vector / PSD list
    where = {}
    lp_off = 0
    sd_idx = 0
    for b, s in enumerate(data.block_sizes, start=1):
        if s < 0:
            where[b] = ("l", lp_off)
            lp_off += -s
        else:
            where[b] = ("s", sd_idx)
            sd_idx += 1
    nl = lp_off
    gl = np.zeros((nl, m))
    hl = np.zeros(nl)
    gs = [np.zeros((d * d, m)) for d in sd_dims]
    hs = [np.zeros((d, d)) for d in sd_dims]
    for (matno, blk, i, j), v in data.entries.items():
        kind, pos = where[blk]
        if kind == "l":
            if i != j:
                raise FormatError(f"off-diagonal entry in diagonal block {blk}")
            if matno == 0:
                hl[pos + i - 1] -= v
            else:
                gl[pos + i - 1, matno - 1] -= v
        else:
            d = sd_dims[pos]
            cells = {(i - 1, j - 1), (j - 1, i - 1)}
            for a, b in cells:
                if matno == 0:
                    hs[pos][a, b] -= v
                else:
                    gs[pos][b * d + a, matno - 1] -= v
    solvers.options["show_progress"] = show_progress
    solvers.options["abstol"] = 1e-10
    solvers.options["reltol"] = 1e-10
    solvers.options["feastol"] = 1e-10
    solvers.options["maxiters"] = 200
    res = solvers.sdp(
        cvxopt.matrix(np.asarray(data.c, dtype=float)),
        Gl=cvxopt.matrix(gl) if nl else None,
        hl=cvxopt.matrix(hl) if nl else None,
        Gs=[cvxopt.matrix(g) for g in gs],
        hs=[cvxopt.matrix(h) for h in hs],
    )
    if res["x"] is None:
        raise RuntimeError(f"cvxopt failed: {res['status']}")
    x = np.array(res["x"]).ravel()
    slack, dual = {}, {}
    for b, s in enumerate(data.block_sizes, start=1):
        kind, pos = where[b]
        if kind == "l":
            slack[b] = np.diag(np.array(res["sl"]).ravel()[pos:pos - s])
            dual[b] = np.diag(np.array(res["zl"]).ravel()[pos:pos - s])
        else:
            slack[b] = np.array(res["ss"][pos])
            dual[b] = np.array(res["zs"][pos])
    return x, slack, dual, res["status"]


def format_solution(x, slack: dict, dual: dict) -> str:
    out = [" ".join(repr(float(v)) for v in x)]
    for matno, mats in ((1, slack), (2, dual)):
        for b, mat in mats.items():
            d = len(mat)
            for i in range(d):
                for j in range(i, d):
                    if mat[i, j] != 0:
                        out.append(f"{matno} {b} {i + 1} {j + 1} {float(mat[i, j])!r}")
    return "\n".join(out) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="flagsdp-sdpa-solve", description="Solve an SDPA sparse file with cvxopt.")
    ap.add_argument("input", help="SDPA sparse problem (.dat-s)")
    ap.add_argument("output", help="solution file to write")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    try:
        data = read_sdpa(args.input)
        x, slack, dual, status = solve_sdpa(data, args.verbose)
    except (OSError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.output, "w") as fh:
        fh.write(format_solution(x, slack, dual))
    print(f"status {status}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
