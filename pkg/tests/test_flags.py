import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from flagsdp import (
    ExcludedFlagError,
    FlagValueError,
    FullSymmetry,
    GraphTheory,
    Theory,
    ThreeGraphTheory,
    TypeMismatchError,
    combine,
    contains_induced,
    ftype_of,
    induced_subflag,
    induced_typed_subflag,
    is_isomorphic,
)
from flagsdp.flags import canonical_form, render

G = GraphTheory


def test_make_flag_normalizes():
    a = G(3, edges=[[0, 1], [0, 2], [1, 2]])
    b = G(3, edges=[[2, 0], [1, 2], [1, 0], [0, 1]])
    assert a == b
    assert a.edges == ((0, 1), (0, 2), (1, 2))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=2, edges=[[0, 2]]),
        dict(n=3, edges=[[0, 1, 2]]),
        dict(n=2, edges=[[1, 1]]),
        dict(n=2, edges=[[0, 1]], ftype=[0, 0]),
        dict(n=2, edges=[[0, 1]], ftype=[2]),
        dict(n=2, colors=[[0]]),
    ],
)
def test_make_flag_errors(kwargs):
    n = kwargs.pop("n")
    with pytest.raises(FlagValueError):
        G(n, **kwargs)


def test_excluded_flag_rejected(triangle_free):
    with pytest.raises(ExcludedFlagError):
        triangle_free(3, edges=[[0, 1], [0, 2], [1, 2]])
    with pytest.raises(ExcludedFlagError):
        triangle_free(4, edges=[[0, 1], [0, 2], [1, 2], [2, 3]])


def test_pointed_flags_differ():
    center = G(3, edges=[[0, 1], [1, 2]], ftype=[1])
    leaf = G(3, edges=[[0, 1], [1, 2]], ftype=[0])
    assert center != leaf
    assert canonical_form(center) != canonical_form(leaf)
    point = G(1, ftype=[0])
    assert center.ftype() == leaf.ftype() == point


def test_ftype_of():
    assert ftype_of(G(3, edges=[[0, 1]])) == G(0)
    t = G(2, edges=[[0, 1]], ftype=[0, 1])
    assert ftype_of(t) == t
    f = G(3, edges=[[0, 2]], ftype=[2, 0])
    assert ftype_of(f) == G(2, edges=[[0, 1]], ftype=[0, 1])


def test_mark_order_matters_on_asymmetric_types():
    f = G(3, edges=[[0, 1], [1, 2]], ftype=[0, 1])
    g = G(3, edges=[[0, 1], [1, 2]], ftype=[1, 0])
    assert f != g


def test_is_isomorphic_examples():
    assert is_isomorphic(G(3, edges=[[0, 1], [1, 2]]), G(3, edges=[[1, 0], [0, 2]]))
    assert not is_isomorphic(G(2, edges=[[0, 1]]), G(2))
    with pytest.raises(Exception):
        is_isomorphic(G(2), ThreeGraphTheory(2))


def test_induced_subflag():
    tri = G(3, edges=[[0, 1], [0, 2], [1, 2]])
    assert induced_subflag(tri, [0, 2]) == G(2, edges=[[0, 1]])
    assert induced_subflag(G(3, edges=[[0, 1], [1, 2]]), [0, 2]) == G(2)
    k4m = G(4, edges=[[0, 1], [0, 2], [0, 3], [1, 2], [1, 3]])
    subs = [induced_subflag(k4m, t) for t in itertools.combinations(range(4), 3)]
    assert sum(s == tri for s in subs) == 2
    assert all(s in (tri, G(3, edges=[[0, 1], [1, 2]])) for s in subs)


def test_induced_typed_subflag():
    f = G(3, edges=[[0, 1], [0, 2]], ftype=[0])
    assert induced_typed_subflag(f, [0, 2]) == G(2, edges=[[0, 1]], ftype=[0])
    with pytest.raises(FlagValueError):
        induced_typed_subflag(f, [1, 2])


def test_contains_induced():
    tri = G(3, edges=[[0, 1], [0, 2], [1, 2]])
    k4 = G(4, edges=list(itertools.combinations(range(4), 2)))
    c5 = G(5, edges=[[0, 1], [1, 2], [2, 3], [3, 4], [0, 4]])
    assert contains_induced(k4, tri)
    assert not contains_induced(c5, tri)
    with pytest.raises(TypeMismatchError):
        contains_induced(k4, G(2, edges=[[0, 1]], ftype=[0]))


def test_compatible_flags():
    cherry = G(3, edges=[[0, 1], [1, 2]])
    tri = G(3, edges=[[0, 1], [0, 2], [1, 2]])
    assert set(G.pattern(3, edges=[[0, 1], [1, 2]]).compatible_flags()) == {cherry, tri}
    comp = G(3, edges=[[0, 1]])
    assert set(G.pattern(3, edges=[[0, 1]], edges_m=[[1, 2]]).compatible_flags()) == {cherry, comp}
    full = G.pattern(3, edges=[[0, 1]], edges_missing=[[0, 2], [1, 2]])
    assert full.compatible_flags() == [comp]


def test_pattern_required_and_forbidden_disjoint():
    with pytest.raises(FlagValueError):
        G.pattern(3, edges=[[0, 1]], edges_missing=[[1, 0]])


def test_render():
    assert render(G(2, edges=[[0, 1]], ftype=[0])) == "Flag on 2 points, ftype from (0,) with edges=(01)"
    assert str(G(3)) == "Flag on 3 points, ftype from () with edges=()"


# -- property tests -------------------------------------------------------------------------


@st.composite
def graph_flags(draw, max_n=6, max_marks=3):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    edges = [p for p in pairs if draw(st.booleans())]
    k = draw(st.integers(0, min(max_marks, n)))
    marks = draw(st.permutations(range(n)))[:k]
    return n, edges, list(marks)


@settings(max_examples=80, deadline=None)
@given(graph_flags(), st.randoms(use_true_random=False))
def test_canonical_form_invariant_under_relabeling(data, rnd):
    n, edges, marks = data
    f = G(n, edges=edges, ftype=marks)
    perm = list(range(n))
    rnd.shuffle(perm)
    g = G(n, edges=[[perm[a], perm[b]] for a, b in edges], ftype=[perm[m] for m in marks])
    assert canonical_form(f) == canonical_form(g)


@settings(max_examples=60, deadline=None)
@given(graph_flags(max_n=5, max_marks=2), graph_flags(max_n=5, max_marks=2))
def test_isomorphism_matches_permutation_search(a, b):
    fa = G(a[0], edges=a[1], ftype=a[2])
    fb = G(b[0], edges=b[1], ftype=b[2])
    assert is_isomorphic(fa, fb) == oracles.brute_isomorphic(oracles.structure(fa), oracles.structure(fb))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.randoms(use_true_random=False))
def test_isomorphic_pairs_from_relabeling(n, rnd):
    pairs = list(itertools.combinations(range(n), 2))
    edges = [p for p in pairs if rnd.random() < 0.5]
    perm = list(range(n))
    rnd.shuffle(perm)
    f = G(n, edges=edges)
    g = G(n, edges=[[perm[a], perm[b]] for a, b in edges])
    assert is_isomorphic(f, g)
    assert oracles.brute_isomorphic(oracles.structure(f), oracles.structure(g))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.randoms(use_true_random=False))
def test_full_symmetry_invariance(n, rnd):
    c = combine("C", G, Theory("O", relation_name="oedges"), Theory("P", relation_name="pedges"), symmetry=FullSymmetry)
    pairs = list(itertools.combinations(range(n), 2))
    rels = [[p for p in pairs if rnd.random() < 0.4] for _ in range(3)]
    names = ["edges", "oedges", "pedges"]
    base = c(n, **dict(zip(names, rels)))
    for perm in itertools.permutations(range(3)):
        other = c(n, **{names[i]: rels[perm[i]] for i in range(3)})
        assert canonical_form(other) == canonical_form(base)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.randoms(use_true_random=False))
def test_pattern_compatible_flags_against_brute_force(n, rnd):
    pairs = list(itertools.combinations(range(n), 2))
    rnd.shuffle(pairs)
    req = pairs[: rnd.randint(0, len(pairs))]
    rest = pairs[len(req):]
    forb = rest[: rnd.randint(0, len(rest))]
    free = [p for p in pairs if p not in req and p not in forb]
    expected = []
    for mask in range(1 << len(free)):
        edges = set(req) | {p for k, p in enumerate(free) if mask >> k & 1}
        s = (n, (), [edges], [(2, False)])
        if not any(oracles.brute_isomorphic(s, e) for e in expected):
            expected.append(s)
    got = G.pattern(n, edges=req, edges_missing=forb).compatible_flags()
    assert len(got) == len(expected)


def test_digraph_distinguishes_orientation():
    D = Theory("DiGraph", relation_name="edges", is_ordered=True)
    assert D(2, edges=[[0, 1]]) == D(2, edges=[[1, 0]])
    assert D(2, edges=[[0, 1]], ftype=[0]) != D(2, edges=[[1, 0]], ftype=[0])
    assert len(D.generate(3)) == 16


def test_threegraph_counts():
    # 3-graphs on 4 vertices are determined by their edge count
    assert len(ThreeGraphTheory.generate(4)) == 5
    with pytest.raises(FlagValueError):
        ThreeGraphTheory(3, edges=[[0, 1, 1]])


def test_random_flags_hash_consistently():
    rnd = random.Random(5)
    seen = {}
    for _ in range(200):
        n = rnd.randint(1, 5)
        edges = [p for p in itertools.combinations(range(n), 2) if rnd.random() < 0.5]
        f = G(n, edges=edges)
        seen.setdefault(f, []).append(oracles.structure(f))
    for f, structs in seen.items():
        assert all(oracles.brute_isomorphic(structs[0], s) for s in structs)
