"""Plain-text certificate files.

Layout, one record per line (flags are written as canonical keys, rationals as p/q):

    flagsdp-certificate 1
    theory {...json...}
    state_hash <hex>
    n <N>
    sense maximize|minimize
    bound <p/q>
    method <name>
    target <flag> <coeff>                      (repeated)
    block <type> <dim>
    flag <flag>                                (dim lines)
    row <i> <q_ii> <q_i,i+1> ... <q_i,dim-1>   (dim lines, upper triangle)
    assumption <type> <size> <count>
    term <flag> <coeff>                        (count lines)
    multiplier <assumption index> <flag> <value>
    residual <flag> <value>
    construction {...json...}
    end

Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .errors import FormatError
from .rounding import CertificateBlock, ExactCertificate

MAGIC = "flagsdp-certificate"
VERSION = 1


def _q(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dumps(cert: ExactCertificate) -> str:
    out = [f"{MAGIC} {VERSION}"]
    out.append("theory " + json.dumps(cert.theory, sort_keys=True, separators=(",", ":")))
    out.append(f"state_hash {cert.state_hash}")
    out.append(f"n {cert.n}")
    out.append(f"sense {cert.sense}")
    out.append(f"bound {_q(cert.bound)}")
    if cert.method:
        out.append(f"method {cert.method}")
    for k in sorted(cert.target):
        if cert.target[k]:
            out.append(f"target {k} {_q(cert.target[k])}")
    for b in cert.blocks:
        d = len(b.flags)
        out.append(f"block {b.ftype} {d}")
        out.extend(f"flag {k}" for k in b.flags)
        for i in range(d):
            out.append(f"row {i} " + " ".join(_q(b.q[i][j]) for j in range(i, d)))
    for tcf, size, coeffs in cert.assumptions:
        out.append(f"assumption {tcf} {size} {len(coeffs)}")
        out.extend(f"term {k} {_q(v)}" for k, v in sorted(coeffs.items()))
    for t, mcf, mu in cert.multipliers:
        out.append(f"multiplier {t} {mcf} {_q(mu)}")
    for k in sorted(cert.residuals):
        out.append(f"residual {k} {_q(cert.residuals[k])}")
    if cert.construction is not None:
        out.append("construction " + json.dumps(cert.construction, sort_keys=True, separators=(",", ":")))
    out.append("end")
    return "\n".join(out) + "\n"


def write(cert: ExactCertificate, path) -> Path:
    path = Path(path)
    path.write_text(dumps(cert), encoding="ascii")
    return path


class _Reader:
    def __init__(self, text: str):
        self.lines = [
            (no, line.strip())
            for no, line in enumerate(text.splitlines(), start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
        self.pos = 0

    def peek(self) -> tuple[int, str, list[str]] | None:
        if self.pos >= len(self.lines):
            return None
        no, line = self.lines[self.pos]
        head, _, rest = line.partition(" ")
        return no, head, rest.split()

    def take(self, expected: str | None = None) -> tuple[int, list[str], str]:
        item = self.peek()
        if item is None:
            last = self.lines[-1][0] if self.lines else 1
            raise FormatError(f"unexpected end of file, expected {expected or 'a record'}", last)
        no, head, _ = item
        if expected is not None and head != expected:
            raise FormatError(f"expected {expected!r}, found {head!r}", no)
        self.pos += 1
        return no, self.lines[self.pos - 1][1].partition(" ")[2].split(), self.lines[self.pos - 1][1].partition(" ")[2]


def _rat(s: str, no: int) -> Fraction:
    try:
        if "." in s or "e" in s.lower():
            raise ValueError
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"{s!r} is not a rational p/q", no) from None


def _int(s: str, no: int) -> int:
    try:
        return int(s)
    except ValueError:
        raise FormatError(f"{s!r} is not an integer", no) from None


def _args(args: list[str], count: int, no: int, what: str) -> list[str]:
    if len(args) != count:
        raise FormatError(f"{what} record needs {count} fields, got {len(args)}", no)
    return args


def loads(text: str) -> ExactCertificate:
    r = _Reader(text)
    no, args, _ = r.take(MAGIC)
    if args != [str(VERSION)]:
        raise FormatError(f"unsupported certificate version {' '.join(args)!r}", no)
    no, _, raw = r.take("theory")
    try:
        theory = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad theory JSON: {exc.msg}", no) from None
    no, args, _ = r.take("state_hash")
    state_hash = _args(args, 1, no, "state_hash")[0]
    no, args, _ = r.take("n")
    n = _int(_args(args, 1, no, "n")[0], no)
    no, args, _ = r.take("sense")
    sense = _args(args, 1, no, "sense")[0]
    if sense not in ("maximize", "minimize"):
        raise FormatError(f"unknown sense {sense!r}", no)
    no, args, _ = r.take("bound")
    bound = _rat(_args(args, 1, no, "bound")[0], no)
    method = ""
    target: dict[str, Fraction] = {}
    blocks: list[CertificateBlock] = []
    assumptions = []
    multipliers = []
    residuals: dict[str, Fraction] = {}
    construction = None
    while True:
        item = r.peek()
        if item is None:
            r.take("end")
        no, head, args = item
        if head == "end":
            r.take()
            break
        if head == "method":
            r.take()
            method = _args(args, 1, no, "method")[0]
        elif head == "target":
            r.take()
            k, v = _args(args, 2, no, "target")
            if k in target:
                raise FormatError(f"flag {k} appears twice in the target", no)
            target[k] = _rat(v, no)
        elif head == "block":
            r.take()
            tcf, d = _args(args, 2, no, "block")
            d = _int(d, no)
            flags = [_args(r.take("flag")[1], 1, no, "flag")[0] for _ in range(d)]
            q = [[Fraction(0)] * d for _ in range(d)]
            for i in range(d):
                rno, rargs, _ = r.take("row")
                if len(rargs) != d - i + 1 or _int(rargs[0], rno) != i:
                    raise FormatError(f"row {i} of block {tcf} needs index {i} and {d - i} entries", rno)
                for j, s in enumerate(rargs[1:], start=i):
                    q[i][j] = q[j][i] = _rat(s, rno)
            blocks.append(CertificateBlock(tcf, flags, q))
        elif head == "assumption":
            r.take()
            tcf, size, count = _args(args, 3, no, "assumption")
            coeffs = {}
            for _ in range(_int(count, no)):
                tno, targs, _ = r.take("term")
                k, v = _args(targs, 2, tno, "term")
                coeffs[k] = _rat(v, tno)
            assumptions.append((tcf, _int(size, no), coeffs))
        elif head == "multiplier":
            r.take()
            t, k, v = _args(args, 3, no, "multiplier")
            multipliers.append((_int(t, no), k, _rat(v, no)))
        elif head == "residual":
            r.take()
            k, v = _args(args, 2, no, "residual")
            residuals[k] = _rat(v, no)
        elif head == "construction":
            _, _, raw = r.take()
            try:
                construction = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad construction JSON: {exc.msg}", no) from None
        else:
            raise FormatError(f"unknown record {head!r}", no)
    if r.peek() is not None:
        raise FormatError("content after 'end'", r.peek()[0])
    return ExactCertificate(
        theory=theory,
        state_hash=state_hash,
        n=n,
        sense=sense,
        bound=bound,
        target=target,
        blocks=blocks,
        assumptions=assumptions,
        multipliers=multipliers,
        residuals=residuals,
        construction=construction,
        method=method,
    )


def read(path) -> ExactCertificate:
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError:
        raise FormatError(f"{path} is not an ASCII certificate file") from None
    return loads(text)
