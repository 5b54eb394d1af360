"""Assembly of the flag algebra SDP, SDPA export and numeric solution.

For a maximization problem with target f over the N-vertex flags H the program
certifies

    c >= f_H + sum_sigma <Q_sigma, M_sigma(H)> + sum_t mu_t row_t(H)   for all H,

with Q_sigma PSD and mu >= 0, where M_sigma(H)_ij is the coefficient of H in
project(F_i F_j) and row_t is project(g * m) lifted to N for a positivity
assumption g and a multiplier flag m.  Minimization negates the target.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
import shlex
import subprocess
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import canon, ipm
from .algebra import AlgebraElement, as_element, format_rational
from .enumeration import basis, generate_types, untyped_keys
from .errors import ExternalSolverError, FlagValueError, FormatError, InfeasibleError, SolverError

log = logging.getLogger(__name__)

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


@dataclass(frozen=True)
class SdpBlock:
    tkey: tuple
    size: int                     # flag size (N + |type|) / 2
    dim: int
    # M(H)_ij = count / denominator; entries with i <= j
    h: np.ndarray
    i: np.ndarray
    j: np.ndarray
    count: np.ndarray
    denominator: int

    def matrices_for(self, h_index: int) -> list[tuple[int, int, int]]:
        sel = np.nonzero(self.h == h_index)[0]
        return [(int(self.i[k]), int(self.j[k]), int(self.count[k])) for k in sel]


@dataclass(frozen=True)
class AssumptionRow:
    assumption: int               # index into the positives list
    multiplier: str               # canonical form of the multiplier flag
    row: tuple[Fraction, ...]     # coefficients over the N-vertex basis


@dataclass
class SdpProblem:
    theory: object
    n: int
    sense: str
    target: AlgebraElement        # untyped, lifted to size n, original sense
    blocks: list[SdpBlock]
    assumptions: list[AssumptionRow]
    positives: list[AlgebraElement] = field(default_factory=list)

    @property
    def objective(self) -> tuple[Fraction, ...]:
        """Target coefficients in maximization sense."""
        if self.sense == MAXIMIZE:
            return self.target.coeffs
        return tuple(-c for c in self.target.coeffs)

    @property
    def flags(self):
        return self.target.basis

    def block_matrix(self, b: int, h_index: int) -> np.ndarray:
        blk = self.blocks[b]
        out = np.zeros((blk.dim, blk.dim))
        for i, j, c in blk.matrices_for(h_index):
            out[i, j] = out[j, i] = c / blk.denominator
        return out

    def summary(self) -> str:
        dims = ", ".join(str(b.dim) for b in self.blocks)
        return f"N={self.n}, {len(self.flags)} constraints, blocks [{dims}], {len(self.assumptions)} assumption rows"


@dataclass
class NumericSolution:
    bound: float                          # in the problem's own sense
    q_blocks: list[np.ndarray]
    multipliers: np.ndarray
    slacks: np.ndarray                    # c - f_H - <Q, M(H)> - mu . row_H, maximization sense
    density: np.ndarray                   # dual weights over the N-vertex flags
    status: str = "optimal"
    solver: str = "embedded"


# -- table assembly -------------------------------------------------------------


def admissible_sizes(n: int) -> list[int]:
    return [s for s in range(n % 2, n - 1, 2)]


@lru_cache(maxsize=None)
def square_tables(theory, n: int, s: int) -> dict:
    """Block tables of every type on ``s`` points at truncation size ``n``.

    For each H, every injective placement of the marks and every split of the
    remaining vertices into two halves is counted once.
    """
    sig = theory.signature
    m = (n + s) // 2
    types = {t.key: basis(theory, m, t.key) for t in generate_types(theory, s)}
    types = {k: b for k, b in types.items() if len(b)}
    acc: dict = {k: Counter() for k in types}
    for h_index, (_, _, rels) in enumerate(untyped_keys(theory, n)):
        for theta in itertools.permutations(range(n), s):
            sub = canon.induced(sig, rels, theta)
            tk = canon.canonical_key(sig, s, s, sub) if sig.groups else (s, s, sub)
            b = types.get(tk)
            if b is None:
                continue
            rest = [v for v in range(n) if v not in theta]
            idx = {}
            for a in itertools.combinations(rest, m - s):
                idx[a] = b.index(canon.typed_key(sig, rels, n, theta, a))
            counter = acc[tk]
            for a, i in idx.items():
                comp = tuple(v for v in rest if v not in a)
                j = idx[comp]
                if i <= j:
                    counter[(h_index, i, j)] += 1
    den = math.perm(n, s) * math.comb(n - s, m - s)
    out = {}
    for tk, counter in acc.items():
        items = sorted(counter.items())
        arr = np.array([(h, i, j, c) for (h, i, j), c in items], dtype=np.int64).reshape(-1, 4)
        out[tk] = SdpBlock(tk, m, len(types[tk]), arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], den)
    return out


def _sorted_types(theory, tables: dict) -> list:
    return sorted(tables, key=lambda k: canon.encode_key(theory.signature, k).encode("ascii"))


def assumption_rows(theory, n: int, positives) -> list[AssumptionRow]:
    rows: list[AssumptionRow] = []
    seen = set()
    for t, g in enumerate(positives):
        s = g.tkey[0]
        if g.n > n:
            raise FlagValueError(f"assumption of size {g.n} does not fit in truncation size {n}")
        for k in range(s, n - g.n + s + 1):
            for mflag in basis(theory, k, g.tkey).flags:
                prod = g.multiply(as_element(mflag, theory=theory)).project().lift(n)
                if prod.coeffs in seen or not any(prod.coeffs):
                    continue
                seen.add(prod.coeffs)
                rows.append(AssumptionRow(t, theory.canonical_form(mflag.key), prod.coeffs))
    return rows


def assemble(theory, target, n: int, sense: str = MAXIMIZE, positives=()) -> SdpProblem:
    if sense not in (MAXIMIZE, MINIMIZE):
        raise ValueError(f"sense must be {MAXIMIZE!r} or {MINIMIZE!r}")
    target = as_element(target, theory=theory)
    if target.tkey[0]:
        target = target.project()
    if target.n > n:
        raise FlagValueError(f"target has size {target.n}, larger than the truncation size {n}")
    if n < 2:
        raise FlagValueError("truncation size must be at least 2")
    target = target.lift(n)
    positives = [as_element(g, theory=theory) for g in positives]
    blocks = []
    for s in admissible_sizes(n):
        tables = square_tables(theory, n, s)
        blocks.extend(tables[k] for k in _sorted_types(theory, tables))
    rows = assumption_rows(theory, n, positives)
    log.info("assembled SDP: N=%d, %d flags, %d blocks, %d assumption rows", n, len(target), len(blocks), len(rows))
    return SdpProblem(theory, n, sense, target, blocks, rows, positives)


# -- embedded solver --------------------------------------------------------------


def _block_problem(p: SdpProblem):
    """Shifted standard form: c = c0 + u with u >= 0 and an explicit slack per flag."""
    f = np.array([float(x) for x in p.objective])
    nh = len(f)
    nmu = len(p.assumptions)
    c0 = float(np.min(f)) - 1.0
    kinds, dims, cs, mats = [], [], [], []
    for blk in p.blocks:
        d = blk.dim
        vals = -blk.count / blk.denominator
        rows = np.concatenate([blk.h, blk.h[blk.i != blk.j]])
        cols = np.concatenate([blk.i * d + blk.j, (blk.j * d + blk.i)[blk.i != blk.j]])
        data = np.concatenate([vals, vals[blk.i != blk.j]])
        mats.append(sp.csr_matrix((data, (rows, cols)), shape=(nh, d * d)))
        kinds.append("s")
        dims.append(d)
        cs.append(np.zeros((d, d)))
    nl = 1 + nh + nmu
    lp = sp.lil_matrix((nh, nl))
    lp[:, 0] = 1.0
    for h in range(nh):
        lp[h, 1 + h] = -1.0
    for t, row in enumerate(p.assumptions):
        for h, v in enumerate(row.row):
            if v:
                lp[h, 1 + nh + t] = -float(v)
    c_lp = np.zeros(nl)
    c_lp[0] = 1.0
    kinds.append("l")
    dims.append(nl)
    cs.append(c_lp)
    mats.append(lp.tocsr())
    return ipm.BlockProblem(kinds, dims, cs, mats, f - c0), c0


def residuals(p: SdpProblem, bound: float, q_blocks, multipliers) -> np.ndarray:
    """Maximization-sense residuals c - f_H - <Q, M(H)> - mu . row_H (floats)."""
    f = np.array([float(x) for x in p.objective])
    lhs = f.copy()
    for blk, q in zip(p.blocks, q_blocks):
        w = np.where(blk.i == blk.j, 1.0, 2.0) * q[blk.i, blk.j] * blk.count / blk.denominator
        lhs += np.bincount(blk.h, weights=w, minlength=len(f))
    for mu, row in zip(multipliers, p.assumptions):
        lhs += mu * np.array([float(x) for x in row.row])
    return bound - lhs


def solve_numeric(p: SdpProblem, tolerance: float = 1e-9, max_iterations: int = 100) -> NumericSolution:
    prob, c0 = _block_problem(p)
    res = ipm.solve(prob, ipm.IpmSettings(tolerance=tolerance, max_iterations=max_iterations))
    log.info("interior point: %s after %d iterations, objective %.12g", res.status, res.iterations, res.primal_objective)
    if res.status not in ("optimal", "near_optimal"):
        raise SolverError(f"interior point method failed ({res.status}) after {res.iterations} iterations")
    nh = len(p.flags)
    lp = res.x[-1]
    u = lp[0]
    if u < 0.5:
        # u >= 1 for any bound supported by an actual limit object; a smaller
        # optimum means the assumptions admit no such object
        raise InfeasibleError("the positivity assumptions are infeasible (no density vector satisfies them)")
    c = c0 + u
    q_blocks = [x for x in res.x[:-1]]
    mu = np.maximum(lp[1 + nh:], 0.0)
    slacks = residuals(p, c, q_blocks, mu)
    bound = c if p.sense == MAXIMIZE else -c
    return NumericSolution(bound, q_blocks, mu, slacks, res.y.copy(), res.status, "embedded")


# -- SDPA sparse format -------------------------------------------------------------


def _fmt(x) -> str:
    return repr(float(x))


def sdpa_lines(p: SdpProblem) -> list[str]:
    """SDPA sparse representation of the problem.

    Variables x_H (one per flag) form the primal; the dual matrix holds the Q
    blocks followed by a diagonal block [slack_H..., mu..., c+, c-] with the
    bound c = c+ - c-.  Optimal objective value is -c.
    """
    f = p.objective
    nh = len(f)
    nmu = len(p.assumptions)
    nd = nh + nmu + 2
    sizes = [blk.dim for blk in p.blocks] + [-nd]
    lines = [f"{nh} = mDIM", f"{len(sizes)} = nBLOCK", " ".join(str(s) for s in sizes)]
    lines.append(" ".join(_fmt(-x) for x in f))
    diag = len(p.blocks) + 1
    lines.append(f"0 {diag} {nh + nmu + 1} {nh + nmu + 1} -1.0")
    lines.append(f"0 {diag} {nh + nmu + 2} {nh + nmu + 2} 1.0")
    per_h: list[list[str]] = [[] for _ in range(nh)]
    for b, blk in enumerate(p.blocks, start=1):
        for h, i, j, c in zip(blk.h, blk.i, blk.j, blk.count):
            per_h[h].append(f"{h + 1} {b} {i + 1} {j + 1} {_fmt(Fraction(int(c), blk.denominator))}")
    for h in range(nh):
        lines.extend(per_h[h])
        lines.append(f"{h + 1} {diag} {h + 1} {h + 1} 1.0")
        for t, row in enumerate(p.assumptions):
            if row.row[h]:
                lines.append(f"{h + 1} {diag} {nh + t + 1} {nh + t + 1} {_fmt(row.row[h])}")
        lines.append(f"{h + 1} {diag} {nh + nmu + 1} {nh + nmu + 1} -1.0")
        lines.append(f"{h + 1} {diag} {nh + nmu + 2} {nh + nmu + 2} 1.0")
    return lines


def export_sdpa(p: SdpProblem, path) -> str:
    text = "\n".join(sdpa_lines(p)) + "\n"
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise FormatError(f"cannot write SDPA file {path}: {exc}") from None
    return str(path)


@dataclass
class SdpaData:
    m: int
    block_sizes: list[int]
    c: list[float]
    # (matno, block, i, j) -> value, 1-based as in the file
    entries: dict[tuple[int, int, int, int], float]


def read_sdpa(path) -> SdpaData:
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(k + 1, ln.split('"')[0].strip()) for k, ln in enumerate(raw)]
    lines = [(k, ln) for k, ln in lines if ln and ln[0] not in "*\""]
    try:
        header = []
        it = iter(lines)
        for _ in range(4):
            k, ln = next(it)
            header.append((k, ln.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " ")))
        m = int(header[0][1].split()[0])
        nblocks = int(header[1][1].split()[0])
        sizes = [int(x) for x in header[2][1].split()[:nblocks]]
        c = [float(x) for x in header[3][1].split()[:m]]
        entries = {}
        for k, ln in it:
            parts = ln.split()
            if len(parts) < 5:
                raise FormatError("expected 'matno block i j value'", line=k)
            key = tuple(int(x) for x in parts[:4])
            entries[key] = float(parts[4])
    except (StopIteration, ValueError, IndexError):
        raise FormatError(f"malformed SDPA file {path}") from None
    if len(sizes) != nblocks or len(c) != m:
        raise FormatError(f"SDPA header of {path} is inconsistent")
    return SdpaData(m, sizes, c, entries)


def parse_solution(p: SdpProblem, path) -> NumericSolution:
    """Read a CSDP-style solution: the primal vector, then 'matno block i j value' lines.

    Matrix number 2 is the dual matrix holding the Q blocks and the diagonal block.
    """
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ExternalSolverError(f"cannot read solver output {path}: {exc}") from None
    nh = len(p.flags)
    nmu = len(p.assumptions)
    if not lines:
        raise ExternalSolverError(f"solver output {path} is empty")
    try:
        y = np.array([float(x) for x in lines[0].split()])
        if len(y) != nh:
            raise ValueError(f"expected {nh} primal values, found {len(y)}")
        q_blocks = [np.zeros((b.dim, b.dim)) for b in p.blocks]
        diag = np.zeros(nh + nmu + 2)
        for k, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != 5:
                raise ValueError(f"line {k}: expected 5 fields")
            matno, blk, i, j = (int(x) for x in parts[:4])
            v = float(parts[4])
            if matno != 2:
                continue
            if blk <= len(p.blocks):
                q = q_blocks[blk - 1]
                q[i - 1, j - 1] = q[j - 1, i - 1] = v
            elif blk == len(p.blocks) + 1:
                diag[i - 1] = v
            else:
                raise ValueError(f"line {k}: block {blk} out of range")
    except (ValueError, IndexError) as exc:
        raise ExternalSolverError(f"unparseable solver output {path}: {exc}") from None
    c = diag[nh + nmu] - diag[nh + nmu + 1]
    mu = np.maximum(diag[nh:nh + nmu], 0.0)
    slacks = residuals(p, c, q_blocks, mu)
    bound = c if p.sense == MAXIMIZE else -c
    return NumericSolution(bound, q_blocks, mu, slacks, y, "optimal", "external")


def solve_external(p: SdpProblem, solver_command: str, path=None, timeout: float | None = None) -> NumericSolution:
    """Export, run ``<command> <input.dat-s> <output.sol>`` and read the solution back."""
    workdir = None
    if path is None:
        workdir = tempfile.mkdtemp(prefix="flagsdp-")
        path = os.path.join(workdir, "problem")
    path = str(path)
    dat = path if path.endswith(".dat-s") else path + ".dat-s"
    sol = dat[: -len(".dat-s")] + ".sol"
    export_sdpa(p, dat)
    cmd = shlex.split(solver_command) + [dat, sol]
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    except FileNotFoundError:
        raise ExternalSolverError(f"solver executable not found: {cmd[0]}") from None
    except subprocess.TimeoutExpired:
        raise ExternalSolverError(f"solver timed out after {timeout} s") from None
    if proc.returncode != 0:
        tail = (proc.stderr or proc.stdout).strip().splitlines()[-5:]
        raise ExternalSolverError(f"solver exited with status {proc.returncode}: " + " | ".join(tail))
    return parse_solution(p, sol)


def describe_bound(x: Fraction) -> str:
    return f"{format_rational(x)}~{float(x):.10g}"
