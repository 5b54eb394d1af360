"""Flags, patterns, isomorphism and induced substructures."""

from __future__ import annotations

import itertools
from functools import lru_cache

from . import canon
from .errors import ExcludedFlagError, FlagValueError, TypeMismatchError


def _check_tuples(theory, n: int, r: int, tuples) -> list[tuple[int, ...]]:
    sig = theory.signature
    name, arity = sig.names[r], sig.arities[r]
    out = []
    for t in tuples:
        t = tuple(t)
        if len(t) != arity:
            raise FlagValueError(f"relation {name!r} has arity {arity}, got tuple {list(t)}")
        for v in t:
            if not isinstance(v, int) or isinstance(v, bool):
                raise FlagValueError(f"vertex labels must be integers, got {v!r} in {name!r}")
            if not 0 <= v < n:
                raise FlagValueError(f"vertex {v} out of range for a flag on {n} points")
        if len(set(t)) != len(t):
            raise FlagValueError(f"repeated vertex in tuple {list(t)} of relation {name!r}")
        out.append(t)
    return out


def _check_marks(n: int, ftype) -> tuple[int, ...]:
    marks = tuple(ftype)
    for v in marks:
        if not isinstance(v, int) or not 0 <= v < n:
            raise FlagValueError(f"marked vertex {v!r} out of range for a flag on {n} points")
    if len(set(marks)) != len(marks):
        raise FlagValueError("marked vertices must be distinct")
    return marks


def _parse_relations(theory, n: int, relations: dict, allow_missing: bool):
    names = theory.relation_names
    required = [[] for _ in names]
    forbidden = [[] for _ in names]
    for key, tuples in relations.items():
        if key in names:
            required[names.index(key)] = _check_tuples(theory, n, names.index(key), tuples)
            continue
        base = None
        if allow_missing:
            for suffix in ("_missing", "_m"):
                if key.endswith(suffix) and key[: -len(suffix)] in names:
                    base = key[: -len(suffix)]
                    break
        if base is None:
            raise FlagValueError(f"unknown relation {key!r}; theory {theory.name!r} has {list(names)}")
        forbidden[names.index(base)] = _check_tuples(theory, n, names.index(base), tuples)
    return required, forbidden


class Flag:
    """A structure of a theory with an ordered tuple of marked vertices.

    Equality and hashing go through the canonical key, so two flags are equal
    exactly when they are isomorphic by a map fixing the marks in order.
    """

    __slots__ = ("theory", "n", "rels", "marks", "_key")

    def __init__(self, theory, n: int, rels, marks=(), key=None):
        self.theory = theory
        self.n = n
        self.rels = rels
        self.marks = tuple(marks)
        self._key = key

    @classmethod
    def _from_key(cls, theory, key) -> "Flag":
        n, s, rels = key
        return cls(theory, n, rels, tuple(range(s)), key)

    @property
    def key(self):
        if self._key is None:
            s = len(self.marks)
            if self.marks == tuple(range(s)):
                rels = self.rels
            else:
                order = list(self.marks) + [v for v in range(self.n) if v not in set(self.marks)]
                rels = canon.induced(self.theory.signature, self.rels, order)
            self._key = canon.canonical_key(self.theory.signature, self.n, s, rels)
        return self._key

    @property
    def size(self) -> int:
        return self.n

    def canonical(self) -> "Flag":
        return Flag._from_key(self.theory, self.key)

    def canonical_form(self) -> bytes:
        return canonical_form(self)

    def ftype(self) -> "Flag":
        return ftype_of(self)

    def relation(self, name: str) -> tuple:
        return self.rels[self.theory.relation_names.index(name)]

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        try:
            return self.relation(name)
        except ValueError:
            raise AttributeError(name) from None

    def __eq__(self, other):
        if not isinstance(other, Flag):
            return NotImplemented
        return self.theory.base == other.theory.base and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return render(self)

    __str__ = __repr__

    # arithmetic coerces to flag algebra elements
    def _el(self):
        from .algebra import as_element

        return as_element(self)

    def __add__(self, other):
        return self._el() + other

    def __radd__(self, other):
        return self._el().__radd__(other)

    def __sub__(self, other):
        return self._el() - other

    def __rsub__(self, other):
        return self._el().__rsub__(other)

    def __mul__(self, other):
        return self._el() * other

    def __rmul__(self, other):
        return self._el().__rmul__(other)

    def __neg__(self):
        return -self._el()

    def __truediv__(self, other):
        return self._el() / other

    def project(self, ftype=()):
        return self._el().project(ftype)


class Pattern:
    """Partially specified flag: required, forbidden and free relation tuples."""

    def __init__(self, theory, n, required, forbidden, marks=()):
        self.theory = theory
        self.n = n
        self.required = required
        self.forbidden = forbidden
        self.marks = tuple(marks)

    @classmethod
    def _raw(cls, theory, n, required, forbidden, marks):
        sig = theory.signature
        return cls(theory, n, canon.normalize(sig, required), canon.normalize(sig, forbidden), marks)

    def compatible_flags(self) -> list[Flag]:
        return self._expand(self.theory)

    def _expand(self, theory) -> list[Flag]:
        sig = theory.signature
        free = []
        for r in range(len(sig.names)):
            fixed = set(self.required[r]) | set(self.forbidden[r])
            free.extend((r, t) for t in sig.all_tuples(r, range(self.n)) if t not in fixed)
        seen = {}
        for mask in itertools.product((False, True), repeat=len(free)):
            rels = [list(x) for x in self.required]
            for on, (r, t) in zip(mask, free):
                if on:
                    rels[r].append(t)
            f = Flag(theory, self.n, canon.normalize(sig, rels), self.marks)
            if f.key in seen:
                continue
            if violates_exclusions(theory, self.n, f.rels):
                seen[f.key] = None
                continue
            seen[f.key] = f.canonical()
        flags = [f for f in seen.values() if f is not None]
        return sorted(flags, key=canonical_form)

    def __repr__(self):
        sig = self.theory.signature
        parts = []
        for name, req, forb in zip(sig.names, self.required, self.forbidden):
            parts.append(f"{name}={_render_tuples(req, self.n)}")
            if forb:
                parts.append(f"{name}_missing={_render_tuples(forb, self.n)}")
        return f"Pattern on {self.n} points, ftype from {self.marks!r} with " + " ".join(parts)

    def _el(self):
        from .algebra import as_element

        return as_element(self)

    def __add__(self, other):
        return self._el() + other

    def __radd__(self, other):
        return self._el().__radd__(other)

    def __sub__(self, other):
        return self._el() - other

    def __rsub__(self, other):
        return self._el().__rsub__(other)

    def __mul__(self, other):
        return self._el() * other

    def __rmul__(self, other):
        return self._el().__rmul__(other)

    def __neg__(self):
        return -self._el()

    def project(self, ftype=()):
        return self._el().project(ftype)


def make_flag(theory, n: int, relations: dict, ftype=()) -> Flag:
    if not isinstance(n, int) or n < 0:
        raise FlagValueError(f"flag size must be a nonnegative integer, got {n!r}")
    required, _ = _parse_relations(theory, n, relations, allow_missing=False)
    marks = _check_marks(n, ftype)
    rels = canon.normalize(theory.signature, required)
    if violates_exclusions(theory, n, rels):
        raise ExcludedFlagError(f"flag contains a configuration excluded from theory {theory.name!r}")
    return Flag(theory, n, rels, marks)


def make_pattern(theory, n: int, relations: dict, ftype=()) -> Pattern:
    if not isinstance(n, int) or n < 0:
        raise FlagValueError(f"pattern size must be a nonnegative integer, got {n!r}")
    required, forbidden = _parse_relations(theory, n, relations, allow_missing=True)
    marks = _check_marks(n, ftype)
    for r, (req, forb) in enumerate(zip(canon.normalize(theory.signature, required), canon.normalize(theory.signature, forbidden))):
        clash = set(req) & set(forb)
        if clash:
            name = theory.relation_names[r]
            raise FlagValueError(f"tuples {sorted(clash)} of {name!r} are both required and missing")
    return Pattern._raw(theory, n, required, forbidden, marks)


# -- identity ----------------------------------------------------------------


def canonical_form(f: Flag) -> bytes:
    return canon.encode_key(f.theory.signature, f.key).encode("ascii")


def is_isomorphic(f: Flag, g: Flag) -> bool:
    if f.theory.base != g.theory.base:
        raise TypeMismatchError("flags belong to different theories")
    return f.key == g.key


def ftype_of(f: Flag) -> Flag:
    """The fully marked structure induced on the marked vertices, marks in order."""
    s = len(f.marks)
    rels = canon.induced(f.theory.signature, f.rels, f.marks)
    return Flag(f.theory, s, rels, tuple(range(s)))


def induced_subflag(f: Flag, vertices) -> Flag:
    """Untyped structure induced on ``vertices`` (marks are dropped)."""
    verts = _check_subset(f, vertices)
    return Flag(f.theory, len(verts), canon.induced(f.theory.signature, f.rels, verts), ())


def induced_typed_subflag(f: Flag, vertices) -> Flag:
    """Structure induced on ``vertices``, keeping the marks; they must all lie in the subset."""
    verts = _check_subset(f, vertices)
    missing = [v for v in f.marks if v not in verts]
    if missing:
        raise FlagValueError(f"marked vertices {missing} are outside the chosen subset")
    pos = {v: i for i, v in enumerate(verts)}
    return Flag(f.theory, len(verts), canon.induced(f.theory.signature, f.rels, verts), tuple(pos[v] for v in f.marks))


def _check_subset(f: Flag, vertices) -> list[int]:
    verts = list(vertices)
    if len(set(verts)) != len(verts) or any(not 0 <= v < f.n for v in verts):
        raise FlagValueError(f"{verts} is not a subset of the {f.n} vertices")
    return verts


def contains_induced(f: Flag, h: Flag) -> bool:
    if h.marks:
        raise TypeMismatchError("contains_induced expects an untyped pattern flag")
    if h.n > f.n:
        return False
    sig = f.theory.signature
    for sub in itertools.combinations(range(f.n), h.n):
        if canon.canonical_key(sig, h.n, 0, canon.induced(sig, f.rels, sub)) == h.key:
            return True
    return False


@lru_cache(maxsize=None)
def _exclusion_index(theory):
    by_size: dict[int, tuple[set, set]] = {}
    grouped = bool(theory.signature.groups)
    for key in theory.excluded:
        keys, counts = by_size.setdefault(key[0], (set(), set()))
        keys.add(key)
        counts.add(_count_sig(key[2], grouped))
    return by_size, grouped


def _count_sig(rels, grouped):
    c = tuple(len(t) for t in rels)
    return tuple(sorted(c)) if grouped else c


def violates_exclusions(theory, n: int, rels, new_vertex: int | None = None) -> bool:
    """Whether an untyped structure contains an excluded flag as an induced substructure.

    With ``new_vertex`` given, only vertex subsets containing it are examined.
    """
    if not theory.excluded:
        return False
    sig = theory.signature
    by_size, grouped = _exclusion_index(theory)
    for k, (keys, counts) in by_size.items():
        if k > n:
            continue
        if new_vertex is None:
            subsets = itertools.combinations(range(n), k)
        else:
            others = [v for v in range(n) if v != new_vertex]
            subsets = (c + (new_vertex,) for c in itertools.combinations(others, k - 1))
        for sub in subsets:
            sub_rels = canon.induced(sig, rels, sub)
            if _count_sig(sub_rels, grouped) not in counts:
                continue
            if canon.canonical_key(sig, k, 0, sub_rels) in keys:
                return True
    return False


# -- rendering -----------------------------------------------------------------


def _render_tuples(tuples, n: int) -> str:
    return "(" + " ".join("".join(canon.DIGITS[v] for v in t) for t in tuples) + ")"


def render(f: Flag) -> str:
    rels = " ".join(f"{name}={_render_tuples(t, f.n)}" for name, t in zip(f.theory.relation_names, f.rels))
    return f"Flag on {f.n} points, ftype from {f.marks!r} with {rels}"
