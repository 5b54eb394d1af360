"""Exact flag algebra: densities, lifting, products and the averaging operator.

An element is a vector of exact rationals over ``generate(n, ftype)``.  All the
tables behind the operations are integer counts over vertex subsets, cached per
(theory, type, sizes) so that the SDP assembly can reuse them.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from . import canon
from .enumeration import basis, type_key
from .errors import FlagValueError, TypeMismatchError
from .flags import Flag, Pattern


def _falling(n: int, k: int) -> int:
    return math.perm(n, k)


def _rational(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError(f"floating point coefficient {x!r}; use fractions.Fraction for exact values")
    if isinstance(x, Rational):
        return Fraction(x)
    raise TypeError(f"unsupported coefficient {x!r}")


# -- cached tables ----------------------------------------------------------------


@lru_cache(maxsize=None)
def lift_table(theory, tkey, n: int, m: int) -> tuple[dict, ...]:
    """For each size-``m`` flag H, the counts {F index: #subsets inducing F}; denominator C(m-s, n-s)."""
    s = tkey[0]
    sig = theory.signature
    small = basis(theory, n, tkey)
    big = basis(theory, m, tkey)
    marks = tuple(range(s))
    rows = []
    for h in big.flags:
        counts: dict[int, int] = {}
        for rest in itertools.combinations(range(s, m), n - s):
            i = small.index(canon.typed_key(sig, h.rels, m, marks, rest))
            counts[i] = counts.get(i, 0) + 1
        rows.append(counts)
    return tuple(rows)


@lru_cache(maxsize=None)
def product_table(theory, tkey, n1: int, n2: int) -> tuple[dict, ...]:
    """For each flag H of size n1+n2-s, counts {(i, j): #ordered splits}; denominator C(m-s, n1-s)."""
    s = tkey[0]
    sig = theory.signature
    m = n1 + n2 - s
    b1 = basis(theory, n1, tkey)
    b2 = basis(theory, n2, tkey)
    big = basis(theory, m, tkey)
    marks = tuple(range(s))
    free = range(s, m)
    rows = []
    for h in big.flags:
        counts: dict[tuple[int, int], int] = {}
        for a in itertools.combinations(free, n1 - s):
            b = tuple(v for v in free if v not in a)
            i = b1.index(canon.typed_key(sig, h.rels, m, marks, a))
            j = b2.index(canon.typed_key(sig, h.rels, m, marks, b))
            counts[(i, j)] = counts.get((i, j), 0) + 1
        rows.append(counts)
    return tuple(rows)


@lru_cache(maxsize=None)
def project_table(theory, tkey, n: int, r: int) -> tuple:
    """Averaging onto the first ``r`` marks.

    Returns the reduced type key and, per flag F, ``(index of F-hat, q(F))``.
    """
    s = tkey[0]
    sig = theory.signature
    src = basis(theory, n, tkey)
    rkey = canon.canonical_key(sig, r, r, canon.induced(sig, tkey[2], range(r)))
    dst = basis(theory, n, rkey)
    total = _falling(n - r, s - r)
    out = []
    for f in src.flags:
        # mark-reduced flag, with the retained marks still at 0..r-1
        hat_key = canon.canonical_key(sig, n, r, f.rels)
        hat = dst.flags[dst.index(hat_key)]
        hits = 0
        for extra in itertools.permutations(range(r, n), s - r):
            marks = tuple(range(r)) + extra
            if canon.induced(sig, hat.rels, marks) != tkey[2] and not sig.groups:
                continue
            if canon.typed_key(sig, hat.rels, n, marks) == f.key:
                hits += 1
        out.append((dst.index(hat_key), Fraction(hits, total)))
    return rkey, tuple(out)


# -- elements -------------------------------------------------------------------


class AlgebraElement:
    """Exact rational combination of flags of one size and one type."""

    __slots__ = ("theory", "n", "tkey", "coeffs")

    def __init__(self, theory, n: int, tkey, coeffs):
        self.theory = theory
        self.n = n
        self.tkey = tkey
        self.coeffs = tuple(coeffs)
        if len(self.coeffs) != len(self.basis):
            raise FlagValueError(f"expected {len(self.basis)} coefficients, got {len(self.coeffs)}")

    @property
    def basis(self):
        return basis(self.theory, self.n, self.tkey)

    @property
    def ftype(self) -> Flag:
        return Flag._from_key(self.theory, self.tkey)

    @property
    def size(self) -> int:
        return self.n

    @classmethod
    def constant(cls, theory, tkey, value) -> "AlgebraElement":
        s = tkey[0]
        return cls(theory, s, tkey, [_rational(value)] * len(basis(theory, s, tkey)))

    @classmethod
    def zero(cls, theory, n: int, tkey) -> "AlgebraElement":
        return cls(theory, n, tkey, [Fraction(0)] * len(basis(theory, n, tkey)))

    def values(self) -> dict:
        return dict(zip(self.basis.flags, self.coeffs))

    def __iter__(self):
        return iter(zip(self.coeffs, self.basis.flags))

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, item):
        if isinstance(item, int):
            return self.coeffs[item]
        return self.coeffs[self.basis.index(item)]

    # -- structure maps --------------------------------------------------------

    def lift(self, m: int) -> "AlgebraElement":
        if m < self.n:
            raise FlagValueError(f"cannot lift an element of size {self.n} down to {m}")
        if m == self.n:
            return self
        s = self.tkey[0]
        den = math.comb(m - s, self.n - s)
        rows = lift_table(self.theory, self.tkey, self.n, m)
        coeffs = [sum((self.coeffs[i] * c for i, c in row.items()), Fraction(0)) / den for row in rows]
        return AlgebraElement(self.theory, m, self.tkey, coeffs)

    def project(self, ftype=()) -> "AlgebraElement":
        """Average out marks, keeping those at positions ``ftype``.

        ``ftype`` is a sequence of mark positions (default: none kept) or an int
        ``r`` meaning the first ``r`` marks.
        """
        s = self.tkey[0]
        keep = tuple(range(ftype)) if isinstance(ftype, int) else tuple(ftype)
        if len(set(keep)) != len(keep) or any(not 0 <= i < s for i in keep):
            raise FlagValueError(f"{list(keep)} is not a subset of the {s} type positions")
        elem = self
        if keep != tuple(range(len(keep))):
            elem = self._reorder_marks(keep + tuple(i for i in range(s) if i not in keep))
        r = len(keep)
        if r == s:
            return elem
        rkey, table = project_table(self.theory, elem.tkey, elem.n, r)
        coeffs = [Fraction(0)] * len(basis(self.theory, elem.n, rkey))
        for c, (j, q) in zip(elem.coeffs, table):
            if c:
                coeffs[j] += c * q
        return AlgebraElement(self.theory, elem.n, rkey, coeffs)

    def _reorder_marks(self, order) -> "AlgebraElement":
        sig = self.theory.signature
        s = self.tkey[0]
        rest = tuple(range(s, self.n))
        new_tkey = canon.canonical_key(sig, s, s, canon.induced(sig, self.tkey[2], order))
        new_basis = basis(self.theory, self.n, new_tkey)
        coeffs = [Fraction(0)] * len(new_basis)
        for c, f in zip(self.coeffs, self.basis.flags):
            coeffs[new_basis.index(canon.typed_key(sig, f.rels, self.n, order, rest))] += c
        return AlgebraElement(self.theory, self.n, new_tkey, coeffs)

    def multiply(self, other: "AlgebraElement") -> "AlgebraElement":
        a, b = _align(self, other, lift=False)
        s = a.tkey[0]
        table = product_table(a.theory, a.tkey, a.n, b.n)
        den = math.comb(a.n + b.n - 2 * s, a.n - s)
        coeffs = []
        for row in table:
            total = Fraction(0)
            for (i, j), cnt in row.items():
                if a.coeffs[i] and b.coeffs[j]:
                    total += a.coeffs[i] * b.coeffs[j] * cnt
            coeffs.append(total / den)
        return AlgebraElement(a.theory, a.n + b.n - s, a.tkey, coeffs)

    def evaluate(self, vector) -> Fraction:
        """Inner product with a density vector over this element's basis.

        ``vector`` may also be a construction, evaluated at this size.
        """
        if hasattr(vector, "density_vector"):
            vector = vector.density_vector(self.n, self.tkey)
        vector = list(vector)
        if len(vector) != len(self.coeffs):
            raise FlagValueError(f"density vector has length {len(vector)}, basis has {len(self.coeffs)}")
        return sum((c * _rational(v) for c, v in zip(self.coeffs, vector) if c), Fraction(0))

    # -- arithmetic -------------------------------------------------------------

    def _scalar_or_element(self, other):
        if isinstance(other, (AlgebraElement, Flag, Pattern)):
            return as_element(other)
        return AlgebraElement.constant(self.theory, self.tkey, _rational(other))

    def __add__(self, other):
        try:
            o = self._scalar_or_element(other)
        except TypeError:
            return NotImplemented
        a, b = _align(self, o)
        return AlgebraElement(a.theory, a.n, a.tkey, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.theory, self.n, self.tkey, [-x for x in self.coeffs])

    def __sub__(self, other):
        try:
            o = self._scalar_or_element(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (AlgebraElement, Flag, Pattern)):
            return self.multiply(as_element(other))
        try:
            c = _rational(other)
        except TypeError:
            return NotImplemented
        return AlgebraElement(self.theory, self.n, self.tkey, [c * x for x in self.coeffs])

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return self * (1 / _rational(other))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 1:
            raise ValueError("only positive integer powers are supported")
        out = self
        for _ in range(k - 1):
            out = out.multiply(self)
        return out

    def __eq__(self, other):
        try:
            o = self._scalar_or_element(other)
            a, b = _align(self, o)
        except (TypeError, TypeMismatchError):
            return NotImplemented
        return a.coeffs == b.coeffs

    def __hash__(self):
        return hash((self.tkey, self.n, self.coeffs))

    def __repr__(self):
        return render_element(self)


def _align(a: AlgebraElement, b: AlgebraElement, lift: bool = True):
    if a.theory.base != b.theory.base:
        raise TypeMismatchError("elements belong to different theories")
    if a.theory != b.theory:
        ea, eb = set(a.theory.excluded), set(b.theory.excluded)
        if ea <= eb:
            a = as_element(a, theory=b.theory)
        elif eb <= ea:
            b = as_element(b, theory=a.theory)
        else:
            raise TypeMismatchError("elements come from incomparable theory states; coerce one first")
    if a.tkey != b.tkey:
        raise TypeMismatchError(f"type mismatch: {Flag._from_key(a.theory, a.tkey)} vs {Flag._from_key(b.theory, b.tkey)}")
    if lift:
        m = max(a.n, b.n)
        a, b = a.lift(m), b.lift(m)
    return a, b


def as_element(item, theory=None) -> AlgebraElement:
    """Turn a flag, pattern or element into an element, optionally moved to ``theory``."""
    if isinstance(item, AlgebraElement):
        if theory is None or theory == item.theory:
            return item
        return _move(item, theory)
    if isinstance(item, Pattern):
        flags = item.compatible_flags()
        if not flags:
            if item.marks:
                raise FlagValueError("typed pattern has no compatible flags, so its type is undetermined")
            return as_element(AlgebraElement.zero(item.theory, item.n, type_key(item.theory, None)), theory)
        total = as_element(flags[0])
        for f in flags[1:]:
            total = total + as_element(f)
        return as_element(total, theory)
    if isinstance(item, Flag):
        tkey = type_key(item.theory, item)
        b = basis(item.theory, item.n, tkey)
        coeffs = [Fraction(0)] * len(b)
        coeffs[b.index(item)] = Fraction(1)
        return as_element(AlgebraElement(item.theory, item.n, tkey, coeffs), theory)
    raise TypeError(f"cannot convert {item!r} to a flag algebra element")


def _move(e: AlgebraElement, theory) -> AlgebraElement:
    if theory.base != e.theory.base:
        raise TypeMismatchError("cannot move an element between different signatures")
    target = basis(theory, e.n, e.tkey)
    coeffs = [Fraction(0)] * len(target)
    pos = {f.key: i for i, f in enumerate(target.flags)}
    for c, f in zip(e.coeffs, e.basis.flags):
        if f.key in pos:
            coeffs[pos[f.key]] += c
        # flags excluded in ``theory`` have density zero there
    return AlgebraElement(theory, e.n, e.tkey, coeffs)


# -- functional interface ---------------------------------------------------------


def density(f: Flag, h: Flag) -> Fraction:
    """Probability that a random extension of the type inside ``h`` induces ``f``."""
    if type_key(f.theory, f) != type_key(h.theory, h):
        raise TypeMismatchError("density needs flags of the same type")
    if f.n > h.n:
        raise FlagValueError("the small flag has more vertices than the large one")
    return as_element(f).lift(h.n)[h]


def lift(e, m: int) -> AlgebraElement:
    return as_element(e).lift(m)


def multiply(a, b) -> AlgebraElement:
    return as_element(a).multiply(as_element(b))


def project(e, ftype=()) -> AlgebraElement:
    return as_element(e).project(ftype)


def evaluate(e, vector) -> Fraction:
    return as_element(e).evaluate(vector)


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def render_element(e: AlgebraElement) -> str:
    coeffs = [format_rational(c) for c in e.coeffs]
    width = max((len(c) for c in coeffs), default=0)
    lines = ["Flag Algebra Element over Rational Field"]
    lines += [f"{c.ljust(width)} - {f}" for c, f in zip(coeffs, e.basis.flags)]
    return "\n".join(lines)
