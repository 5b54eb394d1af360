"""Relational theories: signatures, combination, and exclusion-restricted states.

Theories are immutable values.  ``exclude`` returns a new theory instead of
mutating the receiver, so there is nothing to reset between computations.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

from . import canon
from .errors import TheoryError


class Symmetry(enum.Enum):
    NONE = "none"
    FULL = "full"
    CYCLIC = "cyclic"


NoSymmetry = Symmetry.NONE
FullSymmetry = Symmetry.FULL
CyclicSymmetry = Symmetry.CYCLIC


@dataclass(frozen=True)
class RelationSpec:
    name: str
    arity: int
    ordered: bool = False

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.isidentifier():
            raise TheoryError(f"relation name must be a nonempty identifier, got {self.name!r}")
        if not isinstance(self.arity, int) or self.arity < 1:
            raise TheoryError(f"relation {self.name!r}: arity must be a positive integer, got {self.arity!r}")


@dataclass(frozen=True)
class TheorySpec:
    name: str
    relations: tuple[RelationSpec, ...]
    # index groups of relations that may be permuted among themselves
    symmetric_groups: tuple[tuple[int, ...], ...] = ()

    @cached_property
    def signature(self) -> canon.Signature:
        return canon.Signature(
            names=tuple(r.name for r in self.relations),
            arities=tuple(r.arity for r in self.relations),
            ordered=tuple(r.ordered for r in self.relations),
            groups=self.symmetric_groups,
        )

    @property
    def relation_names(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.relations)

    @property
    def symmetry(self) -> Symmetry:
        return Symmetry.FULL if self.symmetric_groups else Symmetry.NONE

    def serialize(self) -> dict:
        return {
            "name": self.name,
            "relations": [[r.name, r.arity, r.ordered] for r in self.relations],
            "symmetric_groups": [list(g) for g in self.symmetric_groups],
        }


def make_theory(name: str, relations) -> TheorySpec:
    if not isinstance(name, str) or not name:
        raise TheoryError("theory name must be a nonempty string")
    relations = tuple(relations)
    if not relations:
        raise TheoryError(f"theory {name!r} needs at least one relation")
    names = [r.name for r in relations]
    dup = {x for x in names if names.count(x) > 1}
    if dup:
        raise TheoryError(f"duplicate relation name(s) {sorted(dup)} in theory {name!r}")
    return TheorySpec(name, relations)


def combine(name: str, *theories, symmetry: Symmetry = Symmetry.NONE) -> "RestrictedTheory":
    """Combine theories with distinct relation names into one signature.

    Exclusions of restricted inputs carry over as patterns: a combined structure
    is excluded when its reduct to the input's relations is excluded there.
    """
    if len(theories) == 1 and isinstance(theories[0], (list, tuple)):
        theories = tuple(theories[0])
    symmetry = Symmetry(symmetry)
    if symmetry is Symmetry.CYCLIC:
        raise TheoryError("cyclic relation symmetry is not supported; use NoSymmetry or FullSymmetry")
    parts = [t if isinstance(t, RestrictedTheory) else RestrictedTheory(t) for t in theories]
    relations: list[RelationSpec] = []
    groups: list[tuple[int, ...]] = []
    for t in parts:
        offset = len(relations)
        groups.extend(tuple(i + offset for i in g) for g in t.base.symmetric_groups)
        relations.extend(t.base.relations)
    spec = make_theory(name, relations)
    names = spec.relation_names
    if len(set(names)) != len(names):
        raise TheoryError("combined theories must use different relation names")
    if symmetry is Symmetry.FULL:
        shapes = {(r.arity, r.ordered) for r in relations}
        if len(relations) < 2 or len(shapes) != 1:
            raise TheoryError("FullSymmetry needs at least two relations of equal arity and orderedness")
        groups = [tuple(range(len(relations)))]
    spec = TheorySpec(name, tuple(relations), tuple(groups))
    result = RestrictedTheory(spec)

    from .flags import Pattern

    items = []
    offset = 0
    for t in parts:
        width = len(t.base.relations)
        for key in t.excluded:
            n, _, rels = key
            required = [()] * len(relations)
            forbidden = [()] * len(relations)
            for r in range(width):
                present = set(rels[r])
                required[offset + r] = tuple(present)
                forbidden[offset + r] = tuple(
                    x for x in spec.signature.all_tuples(offset + r, range(n)) if x not in present
                )
            items.append(Pattern._raw(result, n, required, forbidden, ()))
        offset += width
    return result.exclude(items) if items else result


@dataclass(frozen=True)
class RestrictedTheory:
    base: TheorySpec
    # canonical keys of excluded untyped flags, sorted by canonical form
    excluded: tuple = field(default=())

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def signature(self) -> canon.Signature:
        return self.base.signature

    @property
    def relation_names(self) -> tuple[str, ...]:
        return self.base.relation_names

    # -- identity -----------------------------------------------------------

    def canonical_form(self, key) -> str:
        return canon.encode_key(self.signature, key)

    def serialize(self) -> dict:
        data = self.base.serialize()
        data["excluded"] = [self.canonical_form(k) for k in self.excluded]
        return data

    def serialized(self) -> str:
        return json.dumps(self.serialize(), sort_keys=True, separators=(",", ":"))

    @cached_property
    def state_hash(self) -> str:
        return hashlib.sha256(self.serialized().encode("ascii")).hexdigest()

    @classmethod
    def deserialize(cls, data: dict) -> "RestrictedTheory":
        try:
            rels = tuple(RelationSpec(n, int(a), bool(o)) for n, a, o in data["relations"])
            spec = TheorySpec(data["name"], rels, tuple(tuple(g) for g in data.get("symmetric_groups", [])))
            keys = [canon.decode_key(spec.signature, cf) for cf in data.get("excluded", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise TheoryError(f"bad theory serialization: {exc}") from None
        return cls(spec, _sorted_keys(spec.signature, keys))

    @property
    def unrestricted(self) -> "RestrictedTheory":
        return RestrictedTheory(self.base)

    def __repr__(self) -> str:
        return f"RestrictedTheory({self.name!r}, relations={list(self.relation_names)}, excluded={len(self.excluded)})"

    # -- state changes --------------------------------------------------------

    def exclude(self, items) -> "RestrictedTheory":
        from .flags import Flag, Pattern

        if isinstance(items, (Flag, Pattern)):
            items = [items]
        keys = set(self.excluded)
        for item in items:
            if item.marks:
                raise TheoryError("only flags and patterns with empty type can be excluded")
            if item.theory.base != self.base:
                raise TheoryError("excluded item belongs to a different theory")
            if isinstance(item, Pattern):
                keys.update(f.key for f in item._expand(self.unrestricted))
            else:
                keys.add(item.key)
        return RestrictedTheory(self.base, _sorted_keys(self.signature, keys))

    def reset(self) -> "RestrictedTheory":
        return self.unrestricted

    # -- flag constructors (mirroring ``Theory(size, **relations)``) ----------

    def __call__(self, n: int, ftype=(), **relations):
        from .flags import make_flag

        return make_flag(self, n, relations, ftype)

    def pattern(self, n: int, ftype=(), **relations):
        from .flags import make_pattern

        return make_pattern(self, n, relations, ftype)

    def generate(self, n: int, ftype=None):
        from .enumeration import generate

        return generate(self, n, ftype)

    def generate_types(self, k: int):
        from .enumeration import generate_types

        return generate_types(self, k)

    def coerce(self, item):
        """Move a flag or element built in a related theory state into this one."""
        from .algebra import as_element

        return as_element(item, theory=self)

    def blowup_construction(self, n: int, parts, **relations):
        from .constructions import Construction, make_template

        return Construction(make_template(self, parts, **relations), n)

    def optimize(self, target, n: int, **kwargs):
        from .workflow import optimize

        return optimize(self, target, n, **kwargs)

    def external_optimize(self, target, n: int, file, **kwargs):
        from .workflow import external_optimize

        return external_optimize(self, target, n, file, **kwargs)

    def verify(self, file):
        from .workflow import verify_file

        return verify_file(self, file)


def _sorted_keys(sig, keys) -> tuple:
    return tuple(sorted(keys, key=lambda k: canon.encode_key(sig, k).encode("ascii")))


def Theory(name: str, relation_name: str = "edges", arity: int = 2, is_ordered: bool = False) -> RestrictedTheory:
    """Single-relation theory, e.g. ``Theory("Graph", "edges", 2)``."""
    return RestrictedTheory(make_theory(name, [RelationSpec(relation_name, arity, is_ordered)]))


GraphTheory = Theory("Graph", relation_name="edges", arity=2, is_ordered=False)
DiGraphTheory = Theory("DiGraph", relation_name="edges", arity=2, is_ordered=True)
ThreeGraphTheory = Theory("ThreeGraph", relation_name="edges", arity=3, is_ordered=False)

BUILTIN_THEORIES = {
    "Graph": GraphTheory,
    "DiGraph": DiGraphTheory,
    "ThreeGraph": ThreeGraphTheory,
}
