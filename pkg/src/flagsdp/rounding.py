"""Rounding numeric SDP solutions to exact certificates, and exact verification."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as sla

from . import canon, exact
from .algebra import AlgebraElement, as_element, format_rational
from .constructions import BlowupTemplate, blowup_vector, rooted_vectors
from .enumeration import basis
from .errors import RoundingError, VerificationError
from .flags import Flag
from .sdp import MAXIMIZE, AssumptionRow, NumericSolution, SdpProblem, assumption_rows, square_tables

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundingSettings:
    denom: int = 1024
    slack_threshold: Fraction = Fraction(1, 10**6)
    kernel_denom: int = 2**20

    def __post_init__(self):
        if not isinstance(self.denom, int) or self.denom < 1:
            raise ValueError("denom must be a positive integer")
        if not isinstance(self.kernel_denom, int) or self.kernel_denom < 1:
            raise ValueError("kernel_denom must be a positive integer")
        if not self.slack_threshold > 0:
            raise ValueError("slack_threshold must be positive")


@dataclass
class CertificateBlock:
    ftype: str                    # canonical form of the type
    flags: list[str]              # canonical forms of the basis, in matrix order
    q: list[list[Fraction]]


@dataclass
class ExactCertificate:
    theory: dict                  # serialized theory state
    state_hash: str
    n: int
    sense: str
    bound: Fraction               # in the problem's own sense
    target: dict[str, Fraction]   # canonical form -> coefficient, N-vertex flags
    blocks: list[CertificateBlock]
    # positivity assumptions as (type canonical form, size, {flag cf: coeff})
    assumptions: list[tuple[str, int, dict[str, Fraction]]]
    # (assumption index, multiplier flag cf, multiplier value)
    multipliers: list[tuple[int, str, Fraction]]
    # maximization-sense residual per N-vertex flag
    residuals: dict[str, Fraction]
    construction: dict | None = None
    method: str = ""

    @property
    def max_denominator(self) -> int:
        return max((x.denominator for b in self.blocks for row in b.q for x in row), default=1)


# -- exact evaluation of a candidate -----------------------------------------------------


def exact_lhs(p: SdpProblem, qs, mus) -> list[Fraction]:
    """f_H + sum <Q, M(H)> + mu . row_H for every N-vertex flag, in maximization sense."""
    f = p.objective
    acc = [Fraction(0)] * len(f)
    for blk, q in zip(p.blocks, qs):
        # integer-weighted sums per flag, divided by the block denominator once
        part = [Fraction(0)] * len(f)
        for h, i, j, c in zip(blk.h.tolist(), blk.i.tolist(), blk.j.tolist(), blk.count.tolist()):
            v = q[i][j]
            if v:
                part[h] += v * (c if i == j else 2 * c)
        for h, v in enumerate(part):
            if v:
                acc[h] += v / blk.denominator
    for mu, row in zip(mus, p.assumptions):
        if mu:
            for h, v in enumerate(row.row):
                if v:
                    acc[h] += mu * v
    return [a + b for a, b in zip(f, acc)]


def make_certificate(p: SdpProblem, qs, mus, construction=None, method="") -> ExactCertificate:
    theory = p.theory
    lhs = exact_lhs(p, qs, mus)
    c = max(lhs)
    hkeys = [theory.canonical_form(f.key) for f in p.flags]
    blocks = []
    for blk, q in zip(p.blocks, qs):
        b = basis(theory, blk.size, blk.tkey)
        blocks.append(CertificateBlock(theory.canonical_form(blk.tkey), [theory.canonical_form(f.key) for f in b], q))
    assumptions = []
    for g in p.positives:
        assumptions.append((
            theory.canonical_form(g.tkey),
            g.n,
            {theory.canonical_form(f.key): x for x, f in zip(g.coeffs, g.basis.flags) if x},
        ))
    multipliers = [(row.assumption, row.multiplier, mu) for row, mu in zip(p.assumptions, mus) if mu]
    return ExactCertificate(
        theory=theory.serialize(),
        state_hash=theory.state_hash,
        n=p.n,
        sense=p.sense,
        bound=c if p.sense == MAXIMIZE else -c,
        target={k: x for k, x in zip(hkeys, p.target.coeffs) if x},
        blocks=blocks,
        assumptions=assumptions,
        multipliers=multipliers,
        residuals={k: c - x for k, x in zip(hkeys, lhs)},
        construction=construction.to_dict() if construction is not None else None,
        method=method,
    )


def _psd_all(qs) -> bool:
    return all(exact.ldl_psd(q).ok for q in qs if q)


# -- plain rounding ----------------------------------------------------------------------


def _round(x: float, denom: int) -> Fraction:
    return Fraction(x).limit_denominator(denom)


def simplest_between(lo: Fraction, hi: Fraction) -> Fraction:
    """The rational with the smallest denominator in the closed interval [lo, hi]."""
    if lo > hi:
        lo, hi = hi, lo
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -simplest_between(-hi, -lo)
    fl = math.floor(lo)
    if fl == lo:
        return Fraction(fl)
    if fl + 1 <= hi:
        return Fraction(fl + 1)
    return fl + 1 / simplest_between(1 / (hi - fl), 1 / (lo - fl))


def _round_near(x: float, tol: float, denom: int) -> Fraction:
    fx = Fraction(x)
    best = simplest_between(fx - Fraction(tol), fx + Fraction(tol))
    return best if best.denominator <= denom else fx.limit_denominator(denom)


def _round_matrix(q: np.ndarray, denom: int) -> list[list[Fraction]]:
    d = len(q)
    out = [[Fraction(0)] * d for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            out[i][j] = out[j][i] = _round(float(q[i, j]), denom)
    return out


def _repair_psd(q: list[list[Fraction]]) -> list[list[Fraction]]:
    """Smallest diagonal loading 2^-k (searched upward) that makes q exactly PSD."""
    if not q or exact.ldl_psd(q).ok:
        return q
    lam = float(np.linalg.eigvalsh(np.array(q, dtype=float))[0])
    k = max(0, -math.floor(math.log2(max(-lam, 1e-300))) + 1)
    while k > -64:
        eps = Fraction(1, 2**k) if k >= 0 else Fraction(2 ** (-k))
        loaded = [[x + eps if i == j else x for j, x in enumerate(row)] for i, row in enumerate(q)]
        if exact.ldl_psd(loaded).ok:
            return loaded
        k -= 1
    raise RoundingError("could not restore positive semidefiniteness by diagonal loading")


def plain_rounding(p: SdpProblem, sol: NumericSolution, settings: RoundingSettings):
    qs = [_repair_psd(_round_matrix(q, settings.denom)) for q in sol.q_blocks]
    mus = [Fraction(math.floor(float(m) * settings.denom), settings.denom) for m in sol.multipliers]
    mus = [max(m, Fraction(0)) for m in mus]
    return qs, mus


# -- kernel-guided rounding --------------------------------------------------------------


KERNEL_TOLERANCES = (1e-3, 1e-5, None)
# exact correction is cubic in the rank with growing integers; beyond this we fall back
MAX_EXACT_RANK = 60


def _numeric_kernel(q: np.ndarray, threshold: float, kernel_denom: int, tol: float | None = None) -> list[list[Fraction]]:
    """Rounded RREF basis of the span of eigenvectors with eigenvalue below ``threshold``.

    Entries are replaced by the simplest rational within ``tol`` (denominator at
    most ``kernel_denom``); without ``tol`` the nearest such rational is used.
    """
    if q.size == 0:
        return []
    w, v = np.linalg.eigh(q)
    e = v[:, w < threshold].T
    if not len(e):
        return []
    _, _, piv = sla.qr(e, pivoting=True)
    cols = np.sort(piv[: len(e)])
    red = np.linalg.solve(e[:, cols], e)
    rows = []
    for r, row in enumerate(red):
        # entries below the threshold are noise of the eigen-solver, not kernel data
        if tol is None:
            out = [Fraction(0) if abs(x) < threshold else _round(x, kernel_denom) for x in row]
        else:
            out = [_round_near(x, tol, kernel_denom) for x in row]
        for c, col in enumerate(cols):
            out[col] = Fraction(int(c == r))
        rows.append(out)
    return rows


@dataclass
class _Reduced:
    r: list[list[Fraction]]       # d x k basis of the kernel complement (columns)
    q0: np.ndarray                # numeric reduced matrix


def _reduce_block(q: np.ndarray, kernel: list[list[Fraction]]) -> _Reduced:
    d = len(q)
    comp = exact.nullspace(kernel, d) if kernel else [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    r = exact.transpose(comp) if comp else [[] for _ in range(d)]
    rf = np.array(r, dtype=float).reshape(d, len(comp))
    if rf.shape[1]:
        pinv = np.linalg.pinv(rf)
        q0 = pinv @ q @ pinv.T
    else:
        q0 = np.zeros((0, 0))
    return _Reduced(r, (q0 + q0.T) / 2)


def _reduced_matrix(blk, red: _Reduced, h_index: int) -> list[list[Fraction]]:
    """R^T M(H) R in exact arithmetic."""
    k = len(red.r[0]) if red.r and red.r[0] else 0
    d = blk.dim
    m = [[Fraction(0)] * d for _ in range(d)]
    for i, j, c in blk.matrices_for(h_index):
        m[i][j] = m[j][i] = Fraction(c, blk.denominator)
    mr = exact.matmul(m, red.r) if k else []
    return exact.matmul(exact.transpose(red.r), mr) if k else []


def _tight_solve(p, sol, settings, tight: list[int], value: Fraction, kernels: list[list[list[Fraction]]], fix_mu_zero):
    """Round the reduced data and correct it exactly so the tight flags hit ``value``."""
    reds = [_reduce_block(q, kern) for q, kern in zip(sol.q_blocks, kernels)]
    f = p.objective
    # unknowns: upper triangles of the reduced blocks, then free multipliers
    var_index = []
    for b, red in enumerate(reds):
        k = red.q0.shape[0]
        var_index.extend((b, i, j) for i in range(k) for j in range(i, k))
    mu_free = [t for t in range(len(p.assumptions)) if not fix_mu_zero[t]]
    nq = len(var_index)
    cols = nq + len(mu_free)
    a_rows, rhs = [], []
    for h in tight:
        row = [Fraction(0)] * cols
        pos = 0
        for blk, red in zip(p.blocks, reds):
            k = red.q0.shape[0]
            if k:
                mm = _reduced_matrix(blk, red, h)
                for i in range(k):
                    for j in range(i, k):
                        row[pos] = mm[i][j] if i == j else 2 * mm[i][j]
                        pos += 1
        for c, t in enumerate(mu_free):
            row[nq + c] = p.assumptions[t].row[h]
        a_rows.append(row)
        rhs.append(value - f[h])
    x0 = [_round(float(reds[b].q0[i, j]), settings.denom) for b, i, j in var_index]
    x0 += [_round(max(float(sol.multipliers[t]), 0.0), settings.denom) for t in mu_free]
    resid = [r - sum((a * x for a, x in zip(row, x0) if a and x), Fraction(0)) for row, r in zip(a_rows, rhs)]
    if a_rows and any(resid):
        af = np.array(a_rows, dtype=float)
        # independent rows, then as many well-conditioned columns
        _, rr, rpiv = sla.qr(af.T, pivoting=True, mode="economic")
        diag = np.abs(np.diag(rr))
        rank = int(np.sum(diag > 1e-10 * max(diag[0], 1e-300))) if len(diag) else 0
        log.debug("exact correction: %d tight rows, rank %d, %d unknowns", len(a_rows), rank, cols)
        if rank > MAX_EXACT_RANK:
            raise RoundingError(f"tight system of rank {rank} is too large for exact correction")
        rsel = sorted(rpiv[:rank].tolist())
        _, _, cpiv = sla.qr(af[rsel], pivoting=True, mode="economic")
        csel = sorted(cpiv[:rank].tolist())
        sub = [[a_rows[r][c] for c in csel] for r in rsel]
        delta = exact.solve_square(sub, [resid[r] for r in rsel])
        if delta is None:
            raise RoundingError("tight-flag equations are singular on the chosen columns")
        for c, dv in zip(csel, delta):
            x0[c] += dv
        for row, r in zip(a_rows, rhs):
            if sum((a * x for a, x in zip(row, x0) if a and x), Fraction(0)) != r:
                raise RoundingError("tight-flag equations have no exact solution for the rounded kernel")
    # rebuild full matrices Q = R Q' R^T
    qs = []
    for b, (blk, red) in enumerate(zip(p.blocks, reds)):
        k = red.q0.shape[0]
        qr = [[Fraction(0)] * k for _ in range(k)]
        for (bb, i, j), v in zip(var_index, x0):
            if bb == b:
                qr[i][j] = qr[j][i] = v
        if k and not exact.ldl_psd(qr).ok:
            raise RoundingError(f"reduced block {b} is not positive semidefinite after exact correction")
        qs.append(exact.matmul(exact.matmul(red.r, qr), exact.transpose(red.r)) if k else [[Fraction(0)] * blk.dim for _ in range(blk.dim)])
    mus = [Fraction(0)] * len(p.assumptions)
    for c, t in enumerate(mu_free):
        mus[t] = x0[nq + c]
    if any(m < 0 for m in mus):
        raise RoundingError("a multiplier became negative after exact correction")
    return qs, mus


def kernel_guided_rounding(p: SdpProblem, sol: NumericSolution, construction: BlowupTemplate, settings: RoundingSettings, use_numeric=True, use_construction=True):
    """Rounding that forces the kernel and the tight flags implied by an extremal construction."""
    dens = blowup_vector(construction, p.n)
    f = p.objective
    value = sum((x * d for x, d in zip(f, dens)), Fraction(0))
    tight = [h for h, d in enumerate(dens) if d > 0]
    kernels = []
    for blk, q in zip(p.blocks, sol.q_blocks):
        rows = []
        if use_construction:
            rows += [list(v) for v in rooted_vectors(construction, blk.tkey, blk.size) if any(v)]
        if use_numeric:
            rows += _numeric_kernel(q, float(settings.slack_threshold), settings.kernel_denom)
        kernels.append(exact.rref(rows, blk.dim)[0] if rows else [])
    fix_zero = []
    for row, mu in zip(p.assumptions, sol.multipliers):
        at_construction = sum((x * d for x, d in zip(row.row, dens)), Fraction(0))
        fix_zero.append(at_construction != 0 or float(mu) < float(settings.slack_threshold))
    return _tight_solve(p, sol, settings, tight, value, kernels, fix_zero)


def snap_rounding(p: SdpProblem, sol: NumericSolution, settings: RoundingSettings):
    """Without a construction: guess the exact value and the tight flags from the numeric slacks."""
    thr = float(settings.slack_threshold)
    c_num = sol.bound if p.sense == MAXIMIZE else -sol.bound
    value = _round(c_num, settings.denom)
    tight = [h for h, s in enumerate(sol.slacks) if s < thr]
    fix_zero = [float(mu) < thr for mu in sol.multipliers]
    # near-singular directions converge slowly, so try coarse kernel guesses first
    last = None
    for tol in KERNEL_TOLERANCES:
        kernels = [_numeric_kernel(q, thr, settings.kernel_denom, tol) for q in sol.q_blocks]
        try:
            return _tight_solve(p, sol, settings, tight, value, kernels, fix_zero)
        except RoundingError as exc:
            last = exc
    raise last


def round_solution(p: SdpProblem, sol: NumericSolution, settings: RoundingSettings | None = None,
                   construction: BlowupTemplate | None = None) -> ExactCertificate:
    """Try the rounding strategies and return the best certificate that verifies."""
    settings = settings or RoundingSettings()
    attempts = []
    if construction is not None:
        attempts += [
            ("kernel", lambda: kernel_guided_rounding(p, sol, construction, settings)),
            ("kernel-construction", lambda: kernel_guided_rounding(p, sol, construction, settings, use_numeric=False)),
            ("kernel-numeric", lambda: kernel_guided_rounding(p, sol, construction, settings, use_construction=False)),
        ]
    attempts += [("snap", lambda: snap_rounding(p, sol, settings)), ("plain", lambda: plain_rounding(p, sol, settings))]
    best = None
    for name, run in attempts:
        try:
            qs, mus = run()
        except (RoundingError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.info("rounding strategy %s failed: %s", name, exc)
            continue
        if not _psd_all(qs) or any(m < 0 for m in mus):
            log.info("rounding strategy %s produced invalid data", name)
            continue
        cert = make_certificate(p, qs, mus, construction, method=name)
        log.info("rounding strategy %s: bound %s", name, format_rational(cert.bound))
        better = best is None or (cert.bound < best.bound if p.sense == MAXIMIZE else cert.bound > best.bound)
        if better:
            best = cert
        if construction is not None and name.startswith("kernel"):
            value = sum((x * d for x, d in zip(p.target.coeffs, blowup_vector(construction, p.n))), Fraction(0))
            if cert.bound == value:
                break
    if best is None:
        raise RoundingError("no rounding strategy produced a valid certificate")
    return best


# -- verification ------------------------------------------------------------------------


def _flag_name(theory, cf: str) -> str:
    return f"{cf} ({Flag._from_key(theory, canon.decode_key(theory.signature, cf))})"


def verify(cert: ExactCertificate, theory) -> Fraction:
    """Recompute everything from the theory and check the certificate exactly.

    Returns the verified bound; raises VerificationError naming the first problem.
    """
    if cert.state_hash != theory.state_hash:
        raise VerificationError(
            "theory state does not match the certificate (different signature or exclusions): "
            f"{theory.state_hash[:12]} vs {cert.state_hash[:12]}"
        )
    sig = theory.signature
    n = cert.n
    if cert.sense not in ("maximize", "minimize"):
        raise VerificationError(f"unknown sense {cert.sense!r}")
    hbasis = basis(theory, n, (0, 0, tuple(() for _ in sig.names)))
    hindex = {theory.canonical_form(f.key): i for i, f in enumerate(hbasis.flags)}
    unknown = [k for k in list(cert.target) + list(cert.residuals) if k not in hindex]
    if unknown:
        raise VerificationError(f"certificate refers to a flag outside the {n}-vertex basis", flag=unknown[0])
    target = [Fraction(0)] * len(hbasis)
    for k, v in cert.target.items():
        target[hindex[k]] = Fraction(v)
    f = target if cert.sense == MAXIMIZE else [-x for x in target]

    # blocks: recompute the tables and align the certificate's basis order with ours
    blocks, qs = [], []
    for cb in cert.blocks:
        try:
            tkey = canon.decode_key(sig, cb.ftype)
        except ValueError as exc:
            raise VerificationError(str(exc)) from None
        s = tkey[0]
        if tkey[1] != s or (n - s) % 2 or s > n - 2:
            raise VerificationError(f"type {cb.ftype} is not admissible at size {n}")
        m = (n + s) // 2
        tables = square_tables(theory, n, s)
        if tkey not in tables:
            raise VerificationError(f"type {cb.ftype} has no flags of size {m}")
        blk = tables[tkey]
        own = [theory.canonical_form(x.key) for x in basis(theory, m, tkey).flags]
        if sorted(own) != sorted(cb.flags):
            raise VerificationError(f"basis of type {cb.ftype} differs from the recomputed basis")
        perm = [cb.flags.index(k) for k in own]
        d = len(own)
        if len(cb.q) != d or any(len(row) != d for row in cb.q):
            raise VerificationError(f"matrix of type {cb.ftype} has the wrong shape")
        q = [[Fraction(cb.q[perm[i]][perm[j]]) for j in range(d)] for i in range(d)]
        for i in range(d):
            for j in range(i):
                if q[i][j] != q[j][i]:
                    raise VerificationError(f"matrix of type {cb.ftype} is not symmetric")
        psd = exact.ldl_psd(q)
        if not psd.ok:
            w = ", ".join(format_rational(x) for x in psd.witness)
            raise VerificationError(f"matrix of type {cb.ftype} is not positive semidefinite; witness v = ({w})")
        blocks.append(blk)
        qs.append(q)

    # assumptions and multipliers
    positives = []
    for tcf, size, coeffs in cert.assumptions:
        try:
            tkey = canon.decode_key(sig, tcf)
        except ValueError as exc:
            raise VerificationError(str(exc)) from None
        b = basis(theory, size, tkey)
        idx = {theory.canonical_form(x.key): i for i, x in enumerate(b.flags)}
        vec = [Fraction(0)] * len(b)
        for k, v in coeffs.items():
            if k not in idx:
                raise VerificationError("assumption refers to an unknown flag", flag=k)
            vec[idx[k]] = Fraction(v)
        positives.append(AlgebraElement(theory, size, tkey, vec))
    rows = {(r.assumption, r.multiplier): r for r in assumption_rows(theory, n, positives)}
    mus, used = [], []
    for t, mcf, mu in cert.multipliers:
        if Fraction(mu) < 0:
            raise VerificationError(f"negative multiplier {format_rational(Fraction(mu))} for assumption {t}")
        row = rows.get((t, mcf))
        if row is None:
            row = _multiplier_row(theory, positives, t, mcf, n)
        used.append(row)
        mus.append(Fraction(mu))

    target_el = AlgebraElement(theory, n, hbasis.type_key, target)
    prob = SdpProblem(theory, n, cert.sense, target_el, blocks, used, positives)
    lhs = exact_lhs(prob, qs, mus)
    claimed = Fraction(cert.bound)
    c = claimed if cert.sense == MAXIMIZE else -claimed
    hkeys = [theory.canonical_form(x.key) for x in hbasis.flags]
    worst = max(range(len(lhs)), key=lambda h: lhs[h])
    if lhs[worst] > c:
        raise VerificationError(
            f"residual negative for flag {_flag_name(theory, hkeys[worst])}: "
            f"bound {format_rational(c)} < {format_rational(lhs[worst])}",
            flag=hkeys[worst],
        )
    if lhs[worst] != c:
        raise VerificationError(
            f"claimed bound {format_rational(claimed)} is not the exact value certified by the data", flag=hkeys[worst]
        )
    for h, k in enumerate(hkeys):
        if cert.residuals.get(k) != c - lhs[h]:
            raise VerificationError(f"recorded residual differs from the recomputed one for flag {_flag_name(theory, k)}", flag=k)
    return claimed


def _multiplier_row(theory, positives, t, mcf, n):
    if not 0 <= t < len(positives):
        raise VerificationError(f"multiplier refers to unknown assumption {t}")
    g = positives[t]
    try:
        key = canon.decode_key(theory.signature, mcf)
    except ValueError as exc:
        raise VerificationError(str(exc)) from None
    mflag = Flag._from_key(theory, key)
    if canon.type_part(theory.signature, key[1], key[2]) != g.tkey[2] or key[1] != g.tkey[0] or key[0] + g.n - key[1] > n:
        raise VerificationError("multiplier flag does not fit its assumption", flag=mcf)
    prod = g.multiply(as_element(mflag, theory=theory)).project().lift(n)
    return AssumptionRow(t, mcf, prod.coeffs)
