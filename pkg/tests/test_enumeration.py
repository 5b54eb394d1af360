import itertools
from fractions import Fraction

import pytest

import oracles
from flagsdp import FlagValueError, GraphTheory, ThreeGraphTheory, generate, generate_types, induced_subflag
from flagsdp.algebra import as_element

G = GraphTheory


@pytest.mark.parametrize("n", range(0, 6))
def test_graph_counts_match_orbit_oracle(n):
    assert len(G.generate(n)) == oracles.graph_orbit_count(n)


def test_triangle_free_three_flags(triangle_free):
    assert len(triangle_free.generate(3)) == 3


def test_excluded_pattern_gives_five_flags():
    pat = G.pattern(4, edges=[[0, 1], [0, 2]], edges_missing=[[0, 3]])
    flags = G.exclude([pat]).generate(5).flags
    # the listing printed for this exclusion, edges written as in that listing
    printed = [
        [],
        [[0, 1]],
        [[0, 2], [1, 4]],
        [[0, 1], [0, 2], [0, 3], [0, 4]],
        list(itertools.combinations(range(5), 2)),
    ]
    assert set(flags) == {G(5, edges=e) for e in printed}


@pytest.mark.parametrize(
    "excluded",
    [
        [[(0, 1), (0, 2), (1, 2)]],
        [[(0, 1), (1, 2)]],
        [[(0, 1)], [(0, 1), (0, 2), (1, 2)]],
    ],
)
def test_restricted_generation_matches_filter_oracle(excluded):
    items = [G(3, edges=e) for e in excluded]
    theory = G.exclude(items)
    for n in range(1, 6):
        expected = 0
        for rep in oracles.unlabeled_graphs(n):
            edges = rep[2][0]
            if not any(oracles.has_induced(edges, n, e, 3) for e in excluded):
                expected += 1
        assert len(theory.generate(n)) == expected, n


def test_downward_closure(triangle_free):
    for n in range(2, 6):
        smaller = set(triangle_free.generate(n - 1).flags)
        for f in triangle_free.generate(n).flags:
            for vs in itertools.combinations(range(n), n - 1):
                assert induced_subflag(f, vs) in smaller


def test_basis_is_sorted_and_unique():
    b = G.generate(5)
    keys = b.canonical_forms()
    assert keys == sorted(keys)
    assert len(set(b.flags)) == len(b)


def test_typed_generation():
    point = G(1, ftype=[0])
    b = G.generate(2, point)
    assert len(b) == 2
    assert all(f.ftype() == point for f in b.flags)
    # pointed 3-vertex graphs: 4 graphs, orbits of vertices
    assert len(G.generate(3, point)) == 6


def test_typed_generation_against_oracle():
    point = G(1, ftype=[0])
    for n in range(1, 5):
        expected = []
        for edges in oracles.labeled_graphs(n):
            s = (n, (0,), [edges], [(2, False)])
            if not any(oracles.brute_isomorphic(s, e) for e in expected):
                expected.append(s)
        assert len(G.generate(n, point)) == len(expected)


def test_generate_errors():
    with pytest.raises(FlagValueError):
        G.generate(1, G(2, edges=[[0, 1]], ftype=[0, 1]))


def test_types():
    assert len(generate_types(G, 1)) == 1
    assert len(generate_types(G, 2)) == 2
    # one labeling per isomorphism class of the underlying graph
    types = generate_types(G, 3)
    assert len(types) == oracles.graph_orbit_count(3)
    assert all(t.ftype() == t for t in types)
    assert len(generate_types(G, 0)) == 1


def test_lifts_of_whole_basis_sum_to_one():
    for m in (3, 4, 5):
        total = sum((as_element(f).lift(m) for f in G.generate(3).flags), start=0 * as_element(G(m)))
        assert set(total.coeffs) == {1}


def test_threegraph_counts():
    assert [len(ThreeGraphTheory.generate(n)) for n in range(6)] == [1, 1, 1, 2, 5, 34]


def test_generate_function_matches_method(triangle_free):
    assert generate(triangle_free, 4).flags == triangle_free.generate(4).flags
    assert len(triangle_free.generate(4)) == 7
    assert sum(Fraction(1) for _ in triangle_free.generate(0).flags) == 1
