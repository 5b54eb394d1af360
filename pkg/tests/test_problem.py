from fractions import Fraction

import pytest

from flagsdp import FormatError, GraphTheory, ThreeGraphTheory
from flagsdp.algebra import as_element
from flagsdp.problem import load, loads, parse_expression, parse_item

G = GraphTheory


def test_flag_literals():
    assert parse_item("flag(3; edges = 01 02 12)", G) == G(3, edges=[[0, 1], [0, 2], [1, 2]])
    assert parse_item("flag(2; edges = 01; ftype = 0)", G) == G(2, edges=[[0, 1]], ftype=[0])
    assert parse_item("flag(1)", G) == G(1)
    assert parse_item("flag(3; edges = 012)", ThreeGraphTheory) == ThreeGraphTheory(3, edges=[[0, 1, 2]])


def test_pattern_literal():
    p = parse_item("pattern(4; edges = 01 02; edges_m = 03)", G)
    q = G.pattern(4, edges=[[0, 1], [0, 2]], edges_missing=[[0, 3]])
    assert set(p.compatible_flags()) == set(q.compatible_flags())


def test_expressions():
    e = parse_expression("flag(2; edges = 01) + flag(3; edges = 01 02 12)", G)
    assert e == G(2, edges=[[0, 1]]) + G(3, edges=[[0, 1], [0, 2], [1, 2]])
    pe = G(2, edges=[[0, 1]], ftype=[0])
    e = parse_expression("project((flag(2; edges = 01; ftype = 0) - 1/2)^2)", G)
    assert e == ((pe - Fraction(1, 2)) * (pe - Fraction(1, 2))).project()
    assert parse_expression("-3/4 + 1", G) == Fraction(1, 4)
    assert parse_expression("2 * flag(2) / 4", G) == as_element(G(2)) / 2


def test_count_literal():
    e = parse_expression("count(3; edges = 1)", G)
    assert e.coeffs == (0, 1, 0, 0)


def test_project_keeps_marks():
    e = parse_expression("project(flag(3; edges = 01; ftype = 0 1); ftype = 0)", G)
    assert e.tkey[0] == 1


@pytest.mark.parametrize(
    "text",
    [
        "flag(2; edges = 01) + 0.5",
        "flag(2; edges = 02)",
        "flag(2; colors = 01)",
        "flag(2; edges = 01",
        "flag(2; edges = 01) +",
        "2 ^ flag(2)",
        "unknown(3)",
        "flag(2; edges = 01) / flag(2)",
        "flag(2; edges = 01; ftype = 0) + flag(2)",
    ],
)
def test_expression_errors(text):
    with pytest.raises(Exception) as info:
        parse_expression(text, G)
    assert "flagsdp" in type(info.value).__module__


def test_decimal_rejected_with_message():
    with pytest.raises(FormatError, match="rational"):
        parse_expression("flag(2; edges = 01) - 0.5", G)


MINIMAL = """
[theory]
base = "Graph"
exclude = ["flag(3; edges = 01 02 12)"]

[problem]
target = "flag(2; edges = 01)"
n = 3
"""


def test_minimal_problem():
    prob = loads(MINIMAL)
    assert prob.n == 3
    assert prob.sense == "maximize"
    assert not prob.exact
    assert prob.theory.excluded
    assert prob.target.n == 2


def test_full_problem(tmp_path):
    text = MINIMAL + """
sense = "minimize"
positives = ["1/2 - flag(2; edges = 01)"]

[rounding]
exact = true
denom = 512
slack_threshold = "1/1000"

[construction]
parts = ["1/3", "2/3"]
edges = [[0, 1]]
random.edges = [{parts = [0, 0], p = "1/4"}]

[output]
certificate = "out.cert"
sdpa = "out.dat-s"
verbosity = 0
"""
    path = tmp_path / "p.toml"
    path.write_text(text)
    prob = load(path)
    assert prob.sense == "minimize"
    assert len(prob.positives) == 1
    assert prob.exact and prob.denom == 512
    assert prob.slack_threshold == Fraction(1, 1000)
    assert prob.construction.weights == (Fraction(1, 3), Fraction(2, 3))
    assert prob.construction.probability(0, (0, 0)) == Fraction(1, 4)
    assert prob.construction.probability(0, (1, 0)) == 1
    assert prob.certificate == tmp_path / "out.cert"
    assert prob.sdpa == tmp_path / "out.dat-s"
    assert prob.verbosity == 0


def test_inline_relations_with_symmetry():
    prob = loads("""
[theory]
name = "Double"
relations = [{name = "edges", arity = 2}, {name = "oedges", arity = 2}]
symmetry = "full"
""")
    t = prob.theory
    assert t(2, edges=[[0, 1]]) == t(2, oedges=[[0, 1]])


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("[problem]\nn = 3.0\n", "decimal"),
        ("[problem]\nn = -1\n", "problem.n"),
        ("[problem]\ntarget = \"1/2\"\n", "at least one flag"),
        ("[problem]\nsense = \"sideways\"\n", "problem.sense"),
        ("[problem]\nbogus = 1\n", "unknown key"),
        ("[extra]\n", "unknown section"),
        ("[theory]\nbase = \"Hypergraph\"\n", "unknown theory"),
        ("[theory]\nexclude = [\"flag(3; edges = 04)\"]\n", r"theory\.exclude\[0\]: vertex 4"),
        ("[rounding]\nexact = \"yes\"\n", "rounding.exact"),
        ("[rounding]\nslack_threshold = \"0.001\"\n", "rational"),
        ("[construction]\nparts = 2\ncolors = [[0, 1]]\n", "unknown key"),
        ("[construction]\nparts = [\"1/2\", \"1/3\"]\n", "sum to 1"),
        ("[construction]\nedges = [[0, 1]]\n", "parts"),
    ],
)
def test_problem_errors(text, fragment):
    with pytest.raises(FormatError, match=fragment):
        loads(text)


def test_toml_syntax_error_has_line():
    with pytest.raises(FormatError) as info:
        loads("[problem]\nn = 3\ntarget = \n")
    assert info.value.line == 3


def test_missing_file(tmp_path):
    with pytest.raises(FormatError, match="cannot read"):
        load(tmp_path / "absent.toml")


def test_shipped_problem_files_parse(problems_dir):
    files = sorted(problems_dir.glob("*.toml"))
    assert len(files) >= 10
    for path in files:
        load(path)
