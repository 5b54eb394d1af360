"""Raw relational structures and their canonical labeling.

A *structure* is a tuple with one entry per relation of a signature.  Each entry
is a sorted tuple of vertex tuples; tuples of unordered relations are stored
sorted.  Marked vertices of a typed structure always occupy labels ``0..s-1`` in
mark order, so a canonical key is simply ``(n, s, rels)``.

Canonical labeling is individualization-refinement: colour refinement on the
unmarked vertices, then a search tree over individualized vertices pruned with
the automorphisms discovered along the way.  The canonical labeling is the leaf
with the lexicographically smallest relation encoding.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"

Tuples = tuple[tuple[int, ...], ...]
Rels = tuple[Tuples, ...]
Key = tuple[int, int, Rels]


@dataclass(frozen=True)
class Signature:
    names: tuple[str, ...]
    arities: tuple[int, ...]
    ordered: tuple[bool, ...]
    groups: tuple[tuple[int, ...], ...] = ()

    @cached_property
    def relation_perms(self) -> tuple[tuple[int, ...], ...]:
        """Relation permutations allowed by the symmetric groups (new index -> old index)."""
        base = tuple(range(len(self.names)))
        if not self.groups:
            return (base,)
        perms = []
        for choice in itertools.product(*(itertools.permutations(g) for g in self.groups)):
            p = list(base)
            for group, image in zip(self.groups, choice):
                for dst, src in zip(group, image):
                    p[dst] = src
            perms.append(tuple(p))
        return tuple(perms)

    def all_tuples(self, r: int, vertices) -> list[tuple[int, ...]]:
        """Every valid tuple of relation ``r`` over ``vertices`` (no repeated entries)."""
        k = self.arities[r]
        if self.ordered[r]:
            return list(itertools.permutations(vertices, k))
        return list(itertools.combinations(sorted(vertices), k))


def normalize(sig: Signature, rels) -> Rels:
    out = []
    for r, tuples in enumerate(rels):
        if sig.ordered[r]:
            out.append(tuple(sorted(set(tuples))))
        else:
            out.append(tuple(sorted({tuple(sorted(t)) for t in tuples})))
    return tuple(out)


def relabel(sig: Signature, rels: Rels, mapping) -> Rels:
    """Apply ``mapping`` (old label -> new label); tuples touching unmapped vertices are dropped."""
    out = []
    for r, tuples in enumerate(rels):
        ordered = sig.ordered[r]
        new = []
        for t in tuples:
            try:
                u = tuple(mapping[v] for v in t)
            except (KeyError, IndexError):
                continue
            if u and min(u) < 0:
                continue
            new.append(u if ordered else tuple(sorted(u)))
        new.sort()
        out.append(tuple(new))
    return tuple(out)


def induced(sig: Signature, rels: Rels, verts) -> Rels:
    """Structure induced on ``verts``; ``verts[i]`` becomes label ``i``."""
    return relabel(sig, rels, {v: i for i, v in enumerate(verts)})


def permute_relations(rels: Rels, perm: tuple[int, ...]) -> Rels:
    return tuple(rels[src] for src in perm)


def type_part(sig: Signature, s: int, rels: Rels) -> Rels:
    return tuple(tuple(t for t in tuples if max(t) < s) for tuples in rels)


def _encode(sig: Signature, rels: Rels, perm) -> Rels:
    out = []
    for r, tuples in enumerate(rels):
        if sig.ordered[r]:
            out.append(tuple(sorted(tuple(perm[v] for v in t) for t in tuples)))
        else:
            out.append(tuple(sorted(tuple(sorted(perm[v] for v in t)) for t in tuples)))
    return tuple(out)


class _Search:
    def __init__(self, sig: Signature, n: int, s: int, rels: Rels):
        self.sig = sig
        self.n = n
        self.rels = rels
        inc: list[list[tuple]] = [[] for _ in range(n)]
        for r, tuples in enumerate(rels):
            ordered = sig.ordered[r]
            for t in tuples:
                for pos, v in enumerate(t):
                    if ordered:
                        inc[v].append((r, pos, t))
                    else:
                        inc[v].append((r, -1, tuple(u for u in t if u != v)))
        self.inc = inc
        self.best: Rels | None = None
        self.best_inv: list[int] | None = None
        self.autos: list[list[int]] = []
        self.start = [i if i < s else s for i in range(n)]

    def refine(self, colors: list[int]) -> list[int]:
        n = self.n
        inc = self.inc
        ncells = len(set(colors))
        while ncells < n:
            sigs = []
            for v in range(n):
                items = []
                for r, pos, t in inc[v]:
                    if pos < 0:
                        items.append((r, pos, tuple(sorted(colors[u] for u in t))))
                    else:
                        items.append((r, pos, tuple(colors[u] if j != pos else -1 for j, u in enumerate(t))))
                items.sort()
                sigs.append((colors[v], tuple(items)))
            # richer neighbourhoods first, so low labels carry the relations
            order = sorted(sorted(set(sigs), key=lambda x: x[1], reverse=True), key=lambda x: x[0])
            if len(order) == ncells:
                break
            rank = {x: i for i, x in enumerate(order)}
            colors = [rank[x] for x in sigs]
            ncells = len(order)
        return colors

    def _orbit_roots(self, path: list[int]) -> list[int]:
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.autos:
            if all(g[v] == v for v in path):
                for v in range(self.n):
                    a, b = find(v), find(g[v])
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        return [find(v) for v in range(self.n)]

    def visit(self, colors: list[int], path: list[int]) -> None:
        colors = self.refine(colors)
        n = self.n
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min((c for c, k in counts.items() if k > 1), default=None)
        if target is None:
            enc = _encode(self.sig, self.rels, colors)
            if self.best is None or enc < self.best:
                self.best = enc
                inv = [0] * n
                for v, c in enumerate(colors):
                    inv[c] = v
                self.best_inv = inv
            elif enc == self.best:
                inv = self.best_inv
                self.autos.append([inv[colors[v]] for v in range(n)])
            return
        members = [v for v in range(n) if colors[v] == target]
        explored: list[int] = []
        for v in members:
            if explored:
                roots = self._orbit_roots(path)
                if roots[v] in {roots[u] for u in explored}:
                    continue
            split = [2 * c + (1 if c == target and u != v else 0) for u, c in enumerate(colors)]
            rank = {c: i for i, c in enumerate(sorted(set(split)))}
            self.visit([rank[c] for c in split], path + [v])
            explored.append(v)


def _canon_vertices(sig: Signature, n: int, s: int, rels: Rels) -> Rels:
    if n - s <= 1:
        return rels
    search = _Search(sig, n, s, rels)
    search.visit(search.start, [])
    return search.best


def canonical_rels(sig: Signature, n: int, s: int, rels: Rels) -> Rels:
    """Canonical representative of a normalized structure whose marks are ``0..s-1``."""
    perms = sig.relation_perms
    if len(perms) == 1:
        return _canon_vertices(sig, n, s, rels)
    variants = [permute_relations(rels, p) for p in perms]
    if s:
        # the type part must come out identical for every flag of that type
        parts = [type_part(sig, s, v) for v in variants]
        best_part = min(parts)
        variants = [v for v, part in zip(variants, parts) if part == best_part]
    return min(_canon_vertices(sig, n, s, v) for v in set(variants))


def canonical_key(sig: Signature, n: int, s: int, rels: Rels) -> Key:
    return (n, s, canonical_rels(sig, n, s, rels))


def typed_key(sig: Signature, rels: Rels, n: int, marks, rest=None) -> Key:
    """Canonical key of ``rels`` with ``marks`` marked, restricted to ``marks + rest``."""
    order = list(marks) + (list(rest) if rest is not None else [v for v in range(n) if v not in set(marks)])
    sub = induced(sig, rels, order)
    return canonical_key(sig, len(order), len(marks), sub)


def encode_key(sig: Signature, key: Key) -> str:
    """Deterministic text form of a canonical key, e.g. ``5:0:edges=02.14``."""
    n, s, rels = key
    parts = []
    for name, tuples in zip(sig.names, rels):
        parts.append(name + "=" + ".".join("".join(DIGITS[v] for v in t) for t in tuples))
    return f"{n}:{s}:" + "|".join(parts)


def decode_key(sig: Signature, text: str) -> Key:
    try:
        n_text, s_text, body = text.split(":", 2)
        n, s = int(n_text), int(s_text)
        chunks = body.split("|") if body else []
        if len(chunks) != len(sig.names):
            raise ValueError("relation count mismatch")
        rels = []
        for name, chunk in zip(sig.names, chunks):
            label, _, tuples = chunk.partition("=")
            if label != name:
                raise ValueError(f"expected relation {name!r}, found {label!r}")
            rels.append(tuple(tuple(DIGITS.index(c) for c in t) for t in tuples.split(".")) if tuples else ())
    except ValueError as exc:
        raise ValueError(f"malformed canonical form {text!r}: {exc}") from None
    return (n, s, normalize(sig, rels))
