"""Declarative problem files (TOML) and the flag expression language.

Expressions combine rationals and flag literals with ``+ - * /`` and ``^``:

    flag(3; edges = 01 02 12)                  untyped triangle
    flag(2; edges = 01; ftype = 0)             pointed edge
    pattern(4; edges = 01 02; edges_m = 03)    pattern with a missing edge
    count(3; edges = 1)                        sum of 3-vertex flags with one edge
    project((flag(2; edges = 01; ftype = 0) - 1/2)^2)

A tuple is written as one token of vertex digits (0-9 then a-z).  Decimal
numbers are rejected; write rationals as p/q.

A problem file looks like::

    [theory]
    base = "Graph"
    exclude = ["flag(3; edges = 01 02 12)"]

    [problem]
    target = "flag(2; edges = 01)"
    n = 3
    sense = "maximize"
    positives = []

    [rounding]
    exact = true
    denom = 1024

    [construction]
    parts = 2
    edges = [[0, 0], [1, 1]]

    [output]
    certificate = "mantel.cert"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import tomli

from .algebra import AlgebraElement, as_element
from .constructions import BlowupTemplate, make_template
from .errors import FlagError, FormatError
from .flags import Flag, Pattern, make_flag, make_pattern
from .sdp import MAXIMIZE, MINIMIZE
from .theory import BUILTIN_THEORIES, RelationSpec, RestrictedTheory, Symmetry, Theory, combine, make_theory

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^();=]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormatError(f"unexpected character {text[pos:].lstrip()[:1]!r} at column {pos + 1}")
        kind = m.lastgroup
        tok = m.group(kind)
        if kind == "num" and not tok.isdigit():
            raise FormatError(f"decimal number {tok!r} at column {m.start(kind) + 1}; use an exact rational p/q")
        out.append(_Tok(kind, tok, m.start(kind)))
        pos = m.end()
    out.append(_Tok("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, theory: RestrictedTheory):
        self.toks = _tokenize(text)
        self.i = 0
        self.theory = theory

    # -- token helpers
    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            found = tok.text or "end of expression"
            raise FormatError(f"expected {text!r} at column {tok.pos + 1}, found {found!r}")
        return tok

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        return FormatError(f"{msg} at column {tok.pos + 1}")

    # -- grammar
    def parse(self):
        value = self.expr()
        if self.peek().kind != "end":
            raise self.error(f"unexpected {self.peek().text!r}")
        return value

    def expr(self):
        value = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term()
            value = _combine(value, rhs, op)
        return value

    def term(self):
        value = self.unary()
        while self.peek().text in ("*", "/"):
            tok = self.next()
            rhs = self.unary()
            if tok.text == "/":
                if not isinstance(rhs, Fraction):
                    raise self.error("can only divide by a rational", tok)
                if rhs == 0:
                    raise self.error("division by zero", tok)
                value = value / rhs
            else:
                value = _combine(value, rhs, "*")
        return value

    def unary(self):
        if self.peek().text == "-":
            self.next()
            return -self.unary()
        if self.peek().text == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            tok = self.next()
            exp = self.next()
            if exp.kind != "num":
                raise self.error("exponent must be a nonnegative integer", exp)
            k = int(exp.text)
            if isinstance(base, Fraction):
                return base**k
            if k == 0:
                raise self.error("zero power of a flag element is ambiguous; write 1", tok)
            return base**k
        return base

    def atom(self):
        tok = self.next()
        if tok.kind == "num":
            return Fraction(int(tok.text))
        if tok.text == "(":
            value = self.expr()
            self.expect(")")
            return value
        if tok.kind == "name":
            if tok.text in ("flag", "pattern"):
                return self.literal(tok.text == "pattern")
            if tok.text == "count":
                return self.count()
            if tok.text == "project":
                return self.project()
            raise self.error(f"unknown function {tok.text!r}", tok)
        raise self.error(f"unexpected {tok.text or 'end of expression'!r}", tok)

    def _fields(self) -> tuple[int, dict[str, list[_Tok]]]:
        """``( n ; key = tokens ; ... )`` with the opening parenthesis still pending."""
        self.expect("(")
        tok = self.next()
        if tok.kind != "num":
            raise self.error("the first field must be the vertex count", tok)
        n = int(tok.text)
        fields: dict[str, list[_Tok]] = {}
        while self.peek().text == ";":
            self.next()
            key = self.next()
            if key.kind != "name":
                raise self.error("expected a field name", key)
            self.expect("=")
            vals = []
            while self.peek().text not in (";", ")") and self.peek().kind != "end":
                vals.append(self.next())
            if key.text in fields:
                raise self.error(f"field {key.text!r} given twice", key)
            fields[key.text] = vals
        self.expect(")")
        return n, fields

    def _marks(self, toks: list[_Tok]) -> list[int]:
        out = []
        for t in toks:
            if t.kind != "num":
                raise self.error("ftype entries must be vertex numbers", t)
            out.append(int(t.text))
        return out

    def _tuples(self, toks: list[_Tok]) -> list[list[int]]:
        out = []
        for t in toks:
            if t.kind not in ("num", "name"):
                raise self.error(f"bad tuple {t.text!r}", t)
            try:
                out.append([int(ch, 36) for ch in t.text.lower()])
            except ValueError:
                raise self.error(f"bad tuple {t.text!r}", t) from None
        return out

    def literal(self, is_pattern: bool):
        start = self.peek()
        n, fields = self._fields()
        marks = self._marks(fields.pop("ftype", []))
        rels = {k: self._tuples(v) for k, v in fields.items()}
        try:
            if is_pattern:
                return make_pattern(self.theory, n, rels, marks)
            return make_flag(self.theory, n, rels, marks)
        except FlagError as exc:
            raise self.error(str(exc), start) from None

    def count(self):
        start = self.peek()
        n, fields = self._fields()
        names = self.theory.relation_names
        want = {}
        for k, v in fields.items():
            if k not in names:
                raise self.error(f"unknown relation {k!r}", start)
            if len(v) != 1 or v[0].kind != "num":
                raise self.error(f"count({k} = ...) needs one integer", start)
            want[k] = int(v[0].text)
        b = self.theory.generate(n)
        coeffs = [Fraction(int(all(len(f.relation(k)) == c for k, c in want.items()))) for f in b.flags]
        if not any(coeffs):
            raise self.error("count(...) matches no flag", start)
        return AlgebraElement(self.theory, n, b.type_key, coeffs)

    def project(self):
        self.expect("(")
        value = self.expr()
        keep = []
        if self.peek().text == ";":
            self.next()
            key = self.next()
            if key.text != "ftype":
                raise self.error("project takes only an ftype field", key)
            self.expect("=")
            while self.peek().text != ")" and self.peek().kind != "end":
                keep.append(self.next())
        self.expect(")")
        if isinstance(value, Fraction):
            return value
        return as_element(value, theory=self.theory).project(tuple(self._marks(keep)))


def _combine(a, b, op: str):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return {"+": a + b, "-": a - b, "*": a * b}[op]
    a = a if isinstance(a, Fraction) else _el(a)
    b = b if isinstance(b, Fraction) else _el(b)
    return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b}[op]()


def _el(x) -> AlgebraElement:
    return x if isinstance(x, AlgebraElement) else as_element(x)


def parse_expression(text: str, theory: RestrictedTheory):
    """Parse an expression; returns a Fraction or an AlgebraElement (flags are promoted)."""
    value = _Parser(text, theory).parse()
    if isinstance(value, (Flag, Pattern)):
        return as_element(value, theory=theory)
    return value


def parse_item(text: str, theory: RestrictedTheory):
    """A single flag or pattern literal (used for exclusions and ftypes)."""
    p = _Parser(text, theory)
    tok = p.next()
    if tok.text not in ("flag", "pattern"):
        raise p.error("expected a flag(...) or pattern(...) literal", tok)
    value = p.literal(tok.text == "pattern")
    if p.peek().kind != "end":
        raise p.error(f"unexpected {p.peek().text!r}")
    return value


# -- problem files ------------------------------------------------------------------------


@dataclass
class Problem:
    theory: RestrictedTheory
    target: AlgebraElement | None = None
    n: int | None = None
    sense: str = MAXIMIZE
    positives: list[AlgebraElement] = field(default_factory=list)
    exact: bool = False
    denom: int = 1024
    slack_threshold: Fraction = Fraction(1, 10**6)
    kernel_denom: int = 2**20
    construction: BlowupTemplate | None = None
    certificate: Path | None = None
    sdpa: Path | None = None
    verbosity: int | None = None


_SECTIONS = {
    "theory": {"base", "name", "relations", "symmetry", "exclude"},
    "problem": {"target", "n", "sense", "positives"},
    "rounding": {"exact", "denom", "slack_threshold", "kernel_denom"},
    "construction": None,   # relation names plus parts / random, checked separately
    "output": {"certificate", "sdpa", "verbosity"},
}


def _reject_float(s: str):
    raise FormatError(f"decimal number {s} in problem file; use an exact rational string such as \"1/2\"")


def _rational(value, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise FormatError(f"{where}: expected a rational, got {value!r}")
    try:
        if isinstance(value, str) and ("." in value or "e" in value.lower()):
            raise ValueError
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise FormatError(f"{where}: {value!r} is not an exact rational p/q") from None


def _int(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise FormatError(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def _context(where: str, fn, *args):
    try:
        return fn(*args)
    except FormatError as exc:
        raise FormatError(f"{where}: {exc}") from None
    except FlagError as exc:
        raise FormatError(f"{where}: {exc}") from None


def parse_theory(section: dict) -> RestrictedTheory:
    if "base" in section and "relations" in section:
        raise FormatError("theory: give either 'base' or 'relations', not both")
    symmetry = section.get("symmetry", "none")
    if symmetry not in ("none", "full", "cyclic"):
        raise FormatError(f"theory.symmetry: unknown value {symmetry!r}")
    if "relations" in section:
        name = section.get("name", "Custom")
        rels = []
        for k, r in enumerate(section["relations"]):
            if not isinstance(r, dict) or set(r) - {"name", "arity", "ordered"} or "name" not in r:
                raise FormatError(f"theory.relations[{k}]: expected {{name, arity, ordered}}")
            rels.append(RelationSpec(r["name"], _int(r.get("arity", 2), f"theory.relations[{k}].arity", 1), bool(r.get("ordered", False))))
        try:
            if symmetry == "none":
                theory = RestrictedTheory(make_theory(name, rels))
            else:
                theory = combine(name, *[Theory(r.name, r.name, r.arity, r.ordered) for r in rels], symmetry=Symmetry(symmetry))
        except FlagError as exc:
            raise FormatError(f"theory: {exc}") from None
    else:
        base = section.get("base", "Graph")
        if base not in BUILTIN_THEORIES:
            raise FormatError(f"theory.base: unknown theory {base!r}; known: {sorted(BUILTIN_THEORIES)}")
        if symmetry != "none":
            raise FormatError("theory.symmetry needs an inline 'relations' list")
        theory = BUILTIN_THEORIES[base]
        if "name" in section:
            raise FormatError("theory.name is only used with inline 'relations'")
    items = []
    for k, text in enumerate(section.get("exclude", [])):
        if not isinstance(text, str):
            raise FormatError(f"theory.exclude[{k}]: expected a flag or pattern literal string")
        items.append(_context(f"theory.exclude[{k}]", parse_item, text, theory))
    if items:
        try:
            theory = theory.exclude(items)
        except FlagError as exc:
            raise FormatError(f"theory.exclude: {exc}") from None
    return theory


def parse_construction(section: dict, theory: RestrictedTheory) -> BlowupTemplate:
    if "parts" not in section:
        raise FormatError("construction: 'parts' is required")
    parts = section["parts"]
    if isinstance(parts, list):
        parts = [_rational(w, "construction.parts") for w in parts]
    else:
        parts = _int(parts, "construction.parts", 1)
    relations: dict = {}
    names = theory.relation_names
    for key, value in section.items():
        if key in ("parts", "random"):
            continue
        if key not in names:
            raise FormatError(f"construction: unknown key {key!r}")
        relations[key] = [tuple(t) for t in value]
    for key, value in section.get("random", {}).items():
        if key not in names:
            raise FormatError(f"construction.random: unknown relation {key!r}")
        probs = {}
        for k, item in enumerate(value):
            if not isinstance(item, dict) or set(item) != {"parts", "p"}:
                raise FormatError(f"construction.random.{key}[{k}]: expected {{parts = [...], p = \"a/b\"}}")
            probs[tuple(item["parts"])] = _rational(item["p"], f"construction.random.{key}[{k}].p")
        for t in relations.pop(key, []):
            probs[t] = Fraction(1)
        relations[key] = probs
    try:
        return make_template(theory, parts, **relations)
    except FlagError as exc:
        raise FormatError(f"construction: {exc}") from None


def loads(text: str, base_dir: Path | None = None) -> Problem:
    try:
        data = tomli.loads(text, parse_float=_reject_float)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise FormatError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None
    base_dir = base_dir or Path.cwd()
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise FormatError(f"unknown section(s) {sorted(unknown)}")
    for sec, keys in _SECTIONS.items():
        if sec in data and not isinstance(data[sec], dict):
            raise FormatError(f"[{sec}] must be a table")
        if keys is not None and sec in data and set(data[sec]) - keys:
            raise FormatError(f"[{sec}]: unknown key(s) {sorted(set(data[sec]) - keys)}")
    theory = parse_theory(data.get("theory", {}))
    prob = Problem(theory)
    sec = data.get("problem", {})
    if "target" in sec:
        value = _context("problem.target", parse_expression, sec["target"], theory)
        if isinstance(value, Fraction):
            raise FormatError("problem.target: the target must involve at least one flag")
        prob.target = value
    if "n" in sec:
        prob.n = _int(sec["n"], "problem.n", 1)
    prob.sense = sec.get("sense", MAXIMIZE)
    if prob.sense not in (MAXIMIZE, MINIMIZE):
        raise FormatError(f"problem.sense: expected 'maximize' or 'minimize', got {prob.sense!r}")
    for k, text in enumerate(sec.get("positives", [])):
        value = _context(f"problem.positives[{k}]", parse_expression, text, theory)
        if isinstance(value, Fraction):
            raise FormatError(f"problem.positives[{k}]: a constant is not a flag assumption")
        prob.positives.append(value)
    sec = data.get("rounding", {})
    exact_flag = sec.get("exact", False)
    if not isinstance(exact_flag, bool):
        raise FormatError("rounding.exact: expected true or false")
    prob.exact = exact_flag
    prob.denom = _int(sec.get("denom", prob.denom), "rounding.denom", 1)
    prob.kernel_denom = _int(sec.get("kernel_denom", prob.kernel_denom), "rounding.kernel_denom", 1)
    if "slack_threshold" in sec:
        prob.slack_threshold = _rational(sec["slack_threshold"], "rounding.slack_threshold")
        if prob.slack_threshold <= 0:
            raise FormatError("rounding.slack_threshold must be positive")
    if "construction" in data:
        prob.construction = parse_construction(data["construction"], theory)
    sec = data.get("output", {})
    for key in ("certificate", "sdpa"):
        if key in sec:
            if not isinstance(sec[key], str):
                raise FormatError(f"output.{key}: expected a path string")
            setattr(prob, key, (base_dir / sec[key]))
    if "verbosity" in sec:
        prob.verbosity = _int(sec["verbosity"], "output.verbosity")
    return prob


def load(path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read problem file {path}: {exc.strerror}") from None
    return loads(text, base_dir=path.parent)
