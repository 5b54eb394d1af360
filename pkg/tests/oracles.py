"""Independent brute-force oracles used by the tests.

Nothing here calls the package's canonical labeling, enumeration or product
tables; structures are plain dicts of tuple sets and isomorphism is decided by
trying every permutation.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import numpy as np


def all_tuples(arity: int, ordered: bool, vertices):
    if ordered:
        return list(itertools.permutations(vertices, arity))
    return list(itertools.combinations(vertices, arity))


def structure(flag):
    """(n, marks, [set of tuples per relation], shapes) from a package Flag."""
    sig = flag.theory.signature
    shapes = list(zip(sig.arities, sig.ordered))
    return flag.n, tuple(flag.marks), [set(map(tuple, r)) for r in flag.rels], shapes


def _apply(rels, perm, shapes):
    out = []
    for r, (arity, ordered) in zip(rels, shapes):
        img = set()
        for t in r:
            u = tuple(perm[v] for v in t)
            img.add(u if ordered else tuple(sorted(u)))
        out.append(img)
    return out


def brute_isomorphic(a, b, groups=()) -> bool:
    """Typed isomorphism by permutation search; ``groups`` lists interchangeable relation sets."""
    n, ma, ra, shapes = a
    m, mb, rb, _ = b
    if n != m or len(ma) != len(mb):
        return False
    rel_perms = [list(range(len(ra)))]
    for g in groups:
        rel_perms = [
            [p[i] if i not in g else q[g.index(i)] for i in range(len(ra))]
            for p in rel_perms
            for q in itertools.permutations(g)
        ]
    rest = [v for v in range(n) if v not in ma]
    targets = [v for v in range(n) if v not in mb]
    for img in itertools.permutations(targets):
        perm = dict(zip(ma, mb))
        perm.update(zip(rest, img))
        mapped = _apply(ra, perm, shapes)
        for rp in rel_perms:
            if all(mapped[rp[i]] == rb[i] for i in range(len(ra))):
                return True
    return False


def induced(rels, vertices, shapes):
    """Relabel the substructure induced on ``vertices`` (in the given order) to 0..k-1."""
    pos = {v: i for i, v in enumerate(vertices)}
    out = []
    for r, (arity, ordered) in zip(rels, shapes):
        img = set()
        for t in r:
            if all(v in pos for v in t):
                u = tuple(pos[v] for v in t)
                img.add(u if ordered else tuple(sorted(u)))
        out.append(img)
    return out


def brute_density(f, h) -> Fraction:
    """p(F, H) straight from the definition."""
    nf, mf, rf, shapes = f
    nh, mh, rh, _ = h
    free = [v for v in range(nh) if v not in mh]
    hits = total = 0
    for sub in itertools.combinations(free, nf - len(mf)):
        total += 1
        s = induced(rh, list(mh) + list(sub), shapes)
        if brute_isomorphic((nf, tuple(range(len(mf))), s, shapes), (nf, tuple(range(len(mf))), [set(x) for x in _canon_marks(f)], shapes)):
            hits += 1
    return Fraction(hits, total)


def _canon_marks(f):
    """Relabel so the marks come first, in order."""
    n, marks, rels, shapes = f
    order = list(marks) + [v for v in range(n) if v not in marks]
    return induced(rels, order, shapes)


def brute_product_coefficient(f1, f2, h) -> Fraction:
    """Coefficient of H in F1 * F2 (same type), by enumerating vertex splits of H."""
    n1, m1, _, shapes = f1
    n2 = f2[0]
    nh, mh, rh, _ = h
    s = len(mh)
    free = [v for v in range(nh) if v not in mh]
    a_size = n1 - s
    hits = total = 0
    g1 = (n1, tuple(range(s)), _canon_marks(f1), shapes)
    g2 = (n2, tuple(range(s)), _canon_marks(f2), shapes)
    for a in itertools.combinations(free, a_size):
        b = [v for v in free if v not in a]
        total += 1
        sa = (n1, tuple(range(s)), induced(rh, list(mh) + list(a), shapes), shapes)
        sb = (n2, tuple(range(s)), induced(rh, list(mh) + list(b), shapes), shapes)
        if brute_isomorphic(sa, g1) and brute_isomorphic(sb, g2):
            hits += 1
    return Fraction(hits, total)


def brute_projection_factor(f) -> Fraction:
    """q(F): probability that a random ordering of |type| distinct vertices of F-hat reproduces F."""
    n, marks, rels, shapes = f
    s = len(marks)
    canon_f = (n, tuple(range(s)), _canon_marks(f), shapes)
    hits = total = 0
    for theta in itertools.permutations(range(n), s):
        total += 1
        order = list(theta) + [v for v in range(n) if v not in theta]
        g = (n, tuple(range(s)), induced(rels, order, shapes), shapes)
        if brute_isomorphic(g, canon_f):
            hits += 1
    return Fraction(hits, total)


# -- labeled graph enumeration ------------------------------------------------------------


def graph_orbit_count(n: int) -> int:
    """Number of unlabeled graphs on n vertices: sweep all 2^C(n,2) labeled graphs,
    marking each orbit under S_n as seen (numpy-vectorized permutation images)."""
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    if m == 0:
        return 1
    index = {p: k for k, p in enumerate(pairs)}
    perms = list(itertools.permutations(range(n)))
    # image position of every pair bit under every permutation
    img = np.array(
        [[index[tuple(sorted((p[a], p[b])))] for a, b in pairs] for p in perms], dtype=np.int64
    )
    weights = np.int64(1) << img
    seen = np.zeros(1 << m, dtype=bool)
    bits = np.arange(m, dtype=np.int64)
    orbits = 0
    start = 0
    while True:
        rest = np.flatnonzero(~seen[start:])
        if not len(rest):
            return orbits
        mask = start + int(rest[0])
        present = ((mask >> bits) & 1).astype(bool)
        images = np.where(present[None, :], weights, 0).sum(axis=1)
        seen[images] = True
        orbits += 1
        start = mask


def labeled_graphs(n: int):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield {p for k, p in enumerate(pairs) if mask >> k & 1}


def unlabeled_graphs(n: int, keep=lambda edges: True):
    """Representatives of isomorphism classes of graphs on n vertices (n <= 5), by brute force."""
    shapes = [(2, False)]
    reps = []
    for edges in labeled_graphs(n):
        if not keep(edges):
            continue
        s = (n, (), [edges], shapes)
        if not any(brute_isomorphic(s, r) for r in reps if len(r[2][0]) == len(edges)):
            reps.append(s)
    return reps


def has_induced(edges, n, sub_edges, k) -> bool:
    shapes = [(2, False)]
    target = (k, (), [set(sub_edges)], shapes)
    for vs in itertools.combinations(range(n), k):
        if brute_isomorphic((k, (), induced([edges], vs, shapes), shapes), target):
            return True
    return False


# -- Monte Carlo sampling of blow-ups ------------------------------------------------------


def sample_blowup(template, n: int, rng: random.Random):
    """One random n-vertex structure drawn from a blow-up template (rels as tuple sets)."""
    sig = template.theory.signature
    weights = [float(w) for w in template.weights]
    parts = rng.choices(range(len(weights)), weights=weights, k=n)
    rels = []
    for r in range(len(sig.names)):
        on = set()
        for t in all_tuples(sig.arities[r], sig.ordered[r], range(n)):
            p = template.probability(r, tuple(parts[v] for v in t))
            if p == 1 or (p > 0 and rng.random() < float(p)):
                on.add(t)
        rels.append(on)
    return rels


def binomial_sigma(p: float, samples: int) -> float:
    return math.sqrt(max(p * (1 - p), 1e-12) / samples)


# -- certificate re-evaluation through the algebra ------------------------------------------


def algebra_path_lhs(cert, theory):
    """f_H + sum_ij Q_ij [[F_i F_j]]_H + sum mu [[g m]]_H, computed with algebra products.

    This deliberately avoids the precomputed SDP block tables used by the verifier.
    Returns a dict from canonical flag text to the maximization-sense left side.
    """
    from flagsdp import Flag
    from flagsdp.algebra import AlgebraElement, as_element
    from flagsdp.canon import decode_key

    sig = theory.signature
    n = cert.n
    hb = theory.generate(n)
    zero = AlgebraElement.zero(theory, n, hb.type_key)
    sign = 1 if cert.sense == "maximize" else -1
    total = zero
    for cf, v in cert.target.items():
        total = total + sign * v * as_element(Flag._from_key(theory, decode_key(sig, cf)))
    for blk in cert.blocks:
        flags = [as_element(Flag._from_key(theory, decode_key(sig, cf))) for cf in blk.flags]
        typed = None
        for i, fi in enumerate(flags):
            for j, fj in enumerate(flags):
                if blk.q[i][j]:
                    term = blk.q[i][j] * (fi * fj)
                    typed = term if typed is None else typed + term
        if typed is not None:
            total = total + typed.project().lift(n)
    positives = []
    for tcf, size, coeffs in cert.assumptions:
        el = None
        for cf, v in coeffs.items():
            term = v * as_element(Flag._from_key(theory, decode_key(sig, cf)))
            el = term if el is None else el + term
        positives.append(el)
    for t, mcf, mu in cert.multipliers:
        m = as_element(Flag._from_key(theory, decode_key(sig, mcf)))
        total = total + mu * (positives[t] * m).project().lift(n)
    return {theory.canonical_form(f.key): c for c, f in total}
