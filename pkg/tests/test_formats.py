import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgt.core_model import INF
from pgt.formats import (
    FormatError,
    format_decomposition,
    format_graph,
    format_pgt,
    format_weight,
    parse_decomposition,
    parse_graph,
    parse_pgt,
    parse_tree,
)
from pgt.generators import random_sibling_model
from pgt.instance_iso import tree_decomposition

from conftest import DATA, loop


def test_fig1_round_trip(fig1):
    assert parse_pgt(format_pgt(fig1)) == fig1


def test_sibling_edges_round_trip():
    m = loop(4, 2)
    assert parse_pgt(format_pgt(m)).sibling_edges == m.sibling_edges


def test_weights_render_exactly():
    assert format_weight(Fraction(3, 4)) == "3/4"
    assert format_weight(Fraction(6, 3)) == "2"
    assert format_weight(INF) == "inf"


def test_vertex_declared_twice_keeps_deepest():
    text = "pgt 1 undirected\ntemplate T0 parent - param 1\ntemplate T1 parent T0 param 2\nvertex v in T0\nvertex v in T1\n"
    assert parse_pgt(text).template_of("v") == "T1"


@pytest.mark.parametrize(
    "text, needle",
    [
        ("graph 1\n", "pgt 1"),
        ("pgt 1 directed\ntemplate T0 parent X param 1\n", "declared before"),
        ("pgt 1 directed\ntemplate T0 parent - param 1\nvertex a in T9\n", "unknown template"),
        ("pgt 1 directed\ntemplate T0 parent - param 1\nedge a b delta 1\n", "sedge"),
        ("pgt 1 directed\ntemplate T0 parent - param 1\nedge a b w\n", "dangling"),
        ("pgt 1 directed\ntemplate T0 parent - param x\n", "line 2"),
        (
            "pgt 1 directed\ntemplate T0 parent - param 1\ntemplate A parent T0 param 2\ntemplate B parent T0 param 2\n"
            "vertex v in A\nvertex v in B\n",
            "non-laminar",
        ),
    ],
)
def test_malformed_models_name_the_problem(text, needle):
    with pytest.raises(FormatError, match=needle):
        parse_pgt(text)


def test_graph_and_tree_files():
    g = parse_graph(DATA / "tri.el")
    assert not g.directed and len(g.vertices) == 10 and len(g.edges) == 12
    h = parse_graph(format_graph(g))
    assert (h.directed, h.vertices, h.edges) == (g.directed, g.vertices, g.edges)
    p = parse_tree(DATA / "path2.tree")
    assert p.k == 3 and p.root == "a"


def test_tree_rejects_two_parents():
    with pytest.raises(FormatError, match="two parents"):
        parse_tree("tree 1\nchild a c\nchild b c\n")


def test_decomposition_round_trip():
    g = parse_graph(DATA / "tri.el")
    dec = tree_decomposition(g)
    back = parse_decomposition(format_decomposition(dec))
    assert back.root == dec.root and back.bags == {k: frozenset(map(str, v)) for k, v in dec.bags.items()}


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_random_models_round_trip(seed, directed):
    rng = random.Random(seed)
    m = random_sibling_model(rng, n=rng.randint(1, 6), m=rng.randint(0, 8), templates=rng.randint(1, 4), max_param=5, directed=directed, max_weight=4)
    assert parse_pgt(format_pgt(m)) == m
