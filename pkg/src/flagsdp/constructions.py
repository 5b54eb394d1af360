"""Blow-up constructions and their exact flag densities."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from numbers import Rational

from . import canon
from .enumeration import basis
from .errors import ConstructionError, FlagValueError


def _weight(x, what: str) -> Fraction:
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise ConstructionError(f"{what} {x!r} is not a rational number") from None
    if isinstance(x, Rational) and not isinstance(x, bool):
        return Fraction(x)
    raise ConstructionError(
        f"{what} {x!r} is not an exact rational; irrational part sizes are not supported, "
        "use a nearby rational instead"
    )


@dataclass(frozen=True)
class BlowupTemplate:
    """Weighted parts with deterministic and independent random relations between them.

    ``deterministic[r]`` holds part tuples whose vertex tuples always carry
    relation ``r``; ``random[r]`` maps part tuples to a probability.  Part tuples
    of unordered relations are stored sorted; repeated parts mean "inside a part".
    """

    theory: object
    weights: tuple[Fraction, ...]
    deterministic: tuple[frozenset, ...]
    random: tuple[tuple[tuple[tuple[int, ...], Fraction], ...], ...]

    @property
    def parts(self) -> int:
        return len(self.weights)

    def probability(self, r: int, parts: tuple[int, ...]) -> Fraction:
        key = parts if self.theory.signature.ordered[r] else tuple(sorted(parts))
        if key in self.deterministic[r]:
            return Fraction(1)
        return self._random_maps[r].get(key, Fraction(0))

    @cached_property
    def _random_maps(self) -> tuple[dict, ...]:
        return tuple(dict(items) for items in self.random)

    def to_dict(self) -> dict:
        names = self.theory.relation_names
        return {
            "parts": [str(w) for w in self.weights],
            "relations": {n: [list(t) for t in sorted(d)] for n, d in zip(names, self.deterministic) if d},
            "random": {n: [[list(t), str(p)] for t, p in items] for n, items in zip(names, self.random) if items},
        }

    @classmethod
    def from_dict(cls, theory, data: dict) -> "BlowupTemplate":
        relations = {}
        for name, tuples in data.get("relations", {}).items():
            relations[name] = [tuple(t) for t in tuples]
        for name, items in data.get("random", {}).items():
            probs = {tuple(t): Fraction(p) for t, p in items}
            if name in relations:
                probs.update({t: Fraction(1) for t in relations.pop(name)})
            relations[name] = probs
        return make_template(theory, [Fraction(w) for w in data["parts"]], **relations)


def make_template(theory, parts, **relations) -> BlowupTemplate:
    """Build a template; ``parts`` is a part count (equal weights) or a list of weights.

    Each relation keyword takes a list of part tuples (deterministic) or a dict
    mapping part tuples to probabilities.
    """
    if isinstance(parts, int) and not isinstance(parts, bool):
        if parts < 1:
            raise ConstructionError("a template needs at least one part")
        weights = (Fraction(1, parts),) * parts
    else:
        weights = tuple(_weight(w, "part weight") for w in parts)
        if not weights:
            raise ConstructionError("a template needs at least one part")
        if any(w <= 0 for w in weights):
            raise ConstructionError("part weights must be positive")
        if sum(weights) != 1:
            raise ConstructionError(f"part weights must sum to 1, got {sum(weights)}")
    sig = theory.signature
    names = theory.relation_names
    k = len(weights)
    det = [set() for _ in names]
    rnd = [dict() for _ in names]
    for name, spec in relations.items():
        if name not in names:
            raise ConstructionError(f"unknown relation {name!r}; theory has {list(names)}")
        r = names.index(name)
        items = spec.items() if isinstance(spec, dict) else ((t, 1) for t in spec)
        for t, p in items:
            t = tuple(t)
            if len(t) != sig.arities[r] or any(not isinstance(i, int) or not 0 <= i < k for i in t):
                raise ConstructionError(f"bad part tuple {list(t)} for relation {name!r} with {k} parts")
            key = t if sig.ordered[r] else tuple(sorted(t))
            p = _weight(p, "probability")
            if not 0 <= p <= 1:
                raise ConstructionError(f"probability {p} for {list(t)} is outside [0, 1]")
            if key in det[r] or key in rnd[r]:
                raise ConstructionError(f"part tuple {list(t)} of {name!r} given twice")
            if p == 1:
                det[r].add(key)
            elif p > 0:
                rnd[r][key] = p
    return BlowupTemplate(
        theory,
        weights,
        tuple(frozenset(d) for d in det),
        tuple(tuple(sorted(d.items())) for d in rnd),
    )


@lru_cache(maxsize=None)
def blowup_vector(template: BlowupTemplate, n: int) -> tuple[Fraction, ...]:
    """Exact probabilities of each untyped flag of size ``n`` in the blow-up."""
    theory = template.theory
    sig = theory.signature
    target = basis(theory, n, (0, 0, tuple(() for _ in sig.names)))
    out = [Fraction(0)] * len(target)
    k = template.parts
    tuples = [(r, t) for r in range(len(sig.names)) for t in sig.all_tuples(r, range(n))]
    for assignment in itertools.combinations_with_replacement(range(k), n):
        counts = Counter(assignment)
        weight = Fraction(math.factorial(n))
        for part, c in counts.items():
            weight *= template.weights[part] ** c / math.factorial(c)
        fixed = [[] for _ in sig.names]
        free = []
        for r, t in tuples:
            p = template.probability(r, tuple(assignment[v] for v in t))
            if p == 1:
                fixed[r].append(t)
            elif p > 0:
                free.append((r, t, p))
        for outcome in itertools.product((False, True), repeat=len(free)):
            prob = weight
            rels = [list(x) for x in fixed]
            for on, (r, t, p) in zip(outcome, free):
                if on:
                    prob *= p
                    rels[r].append(t)
                else:
                    prob *= 1 - p
            if not prob:
                continue
            key = canon.canonical_key(sig, n, 0, canon.normalize(sig, rels))
            try:
                out[target.index(key)] += prob
            except FlagValueError:
                raise ConstructionError(
                    f"the construction produces a structure excluded from theory {theory.name!r}"
                ) from None
    return tuple(out)


class Construction:
    """A blow-up template together with its density vector at size ``n``."""

    def __init__(self, template: BlowupTemplate, n: int):
        if not isinstance(n, int) or n < 1:
            raise ConstructionError(f"construction size must be a positive integer, got {n!r}")
        self.template = template
        self.n = n
        theory = template.theory
        sizes = {key[0] for key in theory.excluded}
        for m in sizes:
            blowup_vector(template, m)
        blowup_vector(template, n)

    @property
    def theory(self):
        return self.template.theory

    @property
    def element(self):
        from .algebra import AlgebraElement

        return AlgebraElement(self.theory, self.n, (0, 0, tuple(() for _ in self.theory.relation_names)), blowup_vector(self.template, self.n))

    def density_vector(self, n: int, tkey=None) -> tuple[Fraction, ...]:
        if tkey is not None and tkey[0] != 0:
            raise ConstructionError("construction densities are defined for untyped flags only")
        return blowup_vector(self.template, n)

    def density(self, target) -> Fraction:
        return density_in_construction(self.template, target)

    def __repr__(self):
        return f"Construction({self.template.to_dict()}, n={self.n})"


def blowup_construction(template: BlowupTemplate, n: int):
    return Construction(template, n).element


def density_in_construction(template: BlowupTemplate, target) -> Fraction:
    from .algebra import as_element

    e = as_element(target, theory=template.theory)
    if e.tkey[0] != 0:
        raise ConstructionError("density_in_construction needs an untyped target")
    return e.evaluate(blowup_vector(template, e.n))


def _realizations(template: BlowupTemplate, tuples, assignment):
    """Yield (relations, probability) for the given vertex tuples under a part assignment."""
    sig = template.theory.signature
    fixed = [[] for _ in sig.names]
    free = []
    for r, t in tuples:
        p = template.probability(r, tuple(assignment[v] for v in t))
        if p == 1:
            fixed[r].append(t)
        elif p > 0:
            free.append((r, t, p))
    for outcome in itertools.product((False, True), repeat=len(free)):
        prob = Fraction(1)
        rels = [list(x) for x in fixed]
        for on, (r, t, p) in zip(outcome, free):
            if on:
                prob *= p
                rels[r].append(t)
            else:
                prob *= 1 - p
        yield rels, prob


def rooted_vectors(template: BlowupTemplate, tkey, m: int) -> list[tuple[Fraction, ...]]:
    """Conditional densities of the size-``m`` flags of a type, one vector per rooting.

    A rooting places the marked vertices into parts and fixes the random
    relations among them; rootings that do not realize the type are skipped.
    In a construction attaining the optimum every such vector lies in the
    kernel of the corresponding certificate matrix.
    """
    theory = template.theory
    sig = theory.signature
    s = tkey[0]
    target = basis(theory, m, tkey)
    root_tuples = [(r, t) for r in range(len(sig.names)) for t in sig.all_tuples(r, range(s))]
    new_tuples = [
        (r, t) for r in range(len(sig.names)) for t in sig.all_tuples(r, range(m)) if max(t) >= s
    ]
    k = template.parts
    found = []
    for alpha in itertools.product(range(k), repeat=s):
        for root_rels, prob in _realizations(template, root_tuples, alpha):
            if not prob:
                continue
            sub = canon.normalize(sig, root_rels)
            if canon.canonical_key(sig, s, s, sub) != tkey:
                continue
            vec = [Fraction(0)] * len(target)
            for beta in itertools.product(range(k), repeat=m - s):
                weight = Fraction(1)
                for part in beta:
                    weight *= template.weights[part]
                for rels, q in _realizations(template, new_tuples, alpha + beta):
                    if not q:
                        continue
                    full = canon.normalize(sig, [a + b for a, b in zip(root_rels, rels)])
                    key = canon.canonical_key(sig, m, s, full)
                    try:
                        vec[target.index(key)] += weight * q
                    except FlagValueError:
                        raise ConstructionError(
                            f"the construction produces a structure excluded from theory {theory.name!r}"
                        ) from None
            found.append(tuple(vec))
    return sorted(set(found))
