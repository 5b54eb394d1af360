"""Isomorph-free generation of flags and types."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from . import canon
from .errors import FlagValueError, TypeMismatchError
from .flags import Flag, canonical_form, ftype_of, violates_exclusions


def _empty_rels(sig) -> canon.Rels:
    return tuple(() for _ in sig.names)


@lru_cache(maxsize=None)
def untyped_keys(theory, n: int) -> tuple:
    """Canonical keys of all untyped flags on ``n`` vertices, in basis order."""
    sig = theory.signature
    if n == 0:
        return ((0, 0, _empty_rels(sig)),)
    new = n - 1
    fresh = [[t for t in sig.all_tuples(r, range(n)) if new in t] for r in range(len(sig.names))]
    flat = [(r, t) for r, ts in enumerate(fresh) for t in ts]
    seen = set()
    found = []
    for _, _, rels in untyped_keys(theory, n - 1):
        for mask in itertools.product((False, True), repeat=len(flat)):
            ext = [list(x) for x in rels]
            for on, (r, t) in zip(mask, flat):
                if on:
                    ext[r].append(t)
            ext = tuple(tuple(sorted(x)) for x in ext)
            key = canon.canonical_key(sig, n, 0, ext)
            if key in seen:
                continue
            seen.add(key)
            if violates_exclusions(theory, n, ext, new_vertex=new):
                continue
            found.append(key)
    return _sort(sig, found)


def _sort(sig, keys) -> tuple:
    return tuple(sorted(keys, key=lambda k: canon.encode_key(sig, k).encode("ascii")))


@lru_cache(maxsize=None)
def typed_keys(theory, n: int, tkey) -> tuple:
    """Canonical keys of flags on ``n`` vertices whose type has canonical key ``tkey``."""
    s = tkey[0]
    if s == 0:
        return untyped_keys(theory, n)
    sig = theory.signature
    found = set()
    for _, _, rels in untyped_keys(theory, n):
        for theta in itertools.permutations(range(n), s):
            sub = canon.induced(sig, rels, theta)
            if sub != tkey[2] and (not sig.groups or canon.canonical_key(sig, s, s, sub) != tkey):
                continue
            found.add(canon.typed_key(sig, rels, n, theta))
    return _sort(sig, found)


@lru_cache(maxsize=None)
def type_keys(theory, k: int) -> tuple:
    sig = theory.signature
    keys = {(k, k, canon.canonical_rels(sig, k, k, rels)) for _, _, rels in untyped_keys(theory, k)}
    return _sort(sig, keys)


def type_key(theory, ftype) -> tuple:
    """Canonical key of a type given as a flag (its marked part is used) or ``None``."""
    if ftype is None or (isinstance(ftype, (tuple, list)) and not ftype):
        return (0, 0, _empty_rels(theory.signature))
    if not isinstance(ftype, Flag):
        raise TypeMismatchError(f"ftype must be a flag, got {ftype!r}")
    if ftype.theory.base != theory.base:
        raise TypeMismatchError("ftype belongs to a different theory")
    return ftype_of(ftype).key


@dataclass(frozen=True)
class FlagBasis:
    """Ordered, duplicate-free list of canonical flags of one size and type."""

    theory: object
    n: int
    ftype: Flag
    flags: tuple = field(repr=False)

    @classmethod
    def _from_keys(cls, theory, n, tkey, keys) -> "FlagBasis":
        return cls(theory, n, Flag._from_key(theory, tkey), tuple(Flag._from_key(theory, k) for k in keys))

    @property
    def keys(self) -> tuple:
        return tuple(f.key for f in self.flags)

    @property
    def type_key(self):
        return self.ftype.key

    def index(self, flag) -> int:
        key = flag.key if isinstance(flag, Flag) else flag
        try:
            return self._positions[key]
        except KeyError:
            raise FlagValueError(f"{flag!r} is not in the basis of size {self.n}") from None

    @property
    def _positions(self) -> dict:
        pos = self.__dict__.get("_pos")
        if pos is None:
            pos = {f.key: i for i, f in enumerate(self.flags)}
            object.__setattr__(self, "_pos", pos)
        return pos

    def canonical_forms(self) -> list[bytes]:
        return [canonical_form(f) for f in self.flags]

    def __len__(self):
        return len(self.flags)

    def __iter__(self):
        return iter(self.flags)

    def __getitem__(self, i):
        return self.flags[i]


@lru_cache(maxsize=None)
def basis(theory, n: int, tkey) -> FlagBasis:
    return FlagBasis._from_keys(theory, n, tkey, typed_keys(theory, n, tkey))


def generate(theory, n: int, ftype=None) -> FlagBasis:
    """All flags of size ``n`` and the given type, one per isomorphism class."""
    if not isinstance(n, int) or n < 0:
        raise FlagValueError(f"size must be a nonnegative integer, got {n!r}")
    tkey = type_key(theory, ftype)
    if tkey[0] > n:
        raise FlagValueError(f"type on {tkey[0]} points does not fit in flags on {n} points")
    return basis(theory, n, tkey)


def generate_types(theory, k: int) -> list[Flag]:
    """All types on ``k`` points, one labeling per isomorphism class."""
    if not isinstance(k, int) or k < 0:
        raise FlagValueError(f"type size must be a nonnegative integer, got {k!r}")
    return [Flag._from_key(theory, key) for key in type_keys(theory, k)]
