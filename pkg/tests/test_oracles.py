import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from pgt.core_model import ParametricGraphTemplate, WeightedGraph, instantiate
from pgt.maxflow import cut_weight
from pgt.oracles import (
    check_embedding,
    check_paths,
    cut_value_of_side,
    oracle_components,
    oracle_disjoint_paths,
    oracle_distances,
    oracle_flow,
    oracle_mincut,
    oracle_reachable,
    oracle_tree_embedding,
    oracle_tree_occurs,
)
from pgt.treematch import TreePattern

from conftest import graph, star

SINGLE = TreePattern.from_edges([], ["a"])
CHERRY = TreePattern.from_edges([("r", "x"), ("r", "y")])


def _inst(edges, directed=True):
    """Instantiation-shaped graph: every vertex is ``(name, ())``."""
    g = graph(edges, directed=directed)
    return WeightedGraph(directed, tuple((v, ()) for v in g.vertices), tuple(((u, ()), (v, ()), w) for u, v, w in g.edges))


def test_flow_basics():
    g = _inst([("s", "t", 3)])
    assert oracle_flow(g, [("s", ())], [("t", ())]) == 3
    parallel = _inst([("s", f"m{i}") for i in range(3)] + [(f"m{i}", "t") for i in range(3)])
    assert oracle_flow(parallel, [("s", ())], [("t", ())]) == 3


def test_flow_with_source_and_sink_sets():
    g = _inst([("a", "c"), ("b", "c", 2), ("c", "d", 5)])
    assert oracle_flow(g, [("a", ()), ("b", ())], [("d", ())]) == 3


def test_mincut_and_components():
    assert oracle_mincut(instantiate(star(5))) == 1
    assert oracle_components(instantiate(star(3))) == 1
    split = ParametricGraphTemplate.build(False, [("T0", None, 1), ("T1", "T0", 3)], {"a": "T1", "b": "T1"}, [("a", "b")])
    assert oracle_components(instantiate(split)) == 3


def test_single_vertex_pattern():
    inst = instantiate(star(2, directed=True))
    assert oracle_tree_occurs(inst, SINGLE, "v")
    assert not oracle_tree_occurs(inst, SINGLE, "missing")


def test_cherry_in_two_copy_child():
    inst = instantiate(star(2, directed=True))
    emb = oracle_tree_embedding(inst, CHERRY, "r")
    assert {emb["x"], emb["y"]} == {("v", (("T1", 0),)), ("v", (("T1", 1),))}
    assert check_embedding(inst, CHERRY, emb, "r")
    assert not oracle_tree_occurs(instantiate(star(1, directed=True)), CHERRY, "r")


def test_bad_embeddings_rejected():
    inst = instantiate(star(2, directed=True))
    v0 = ("v", (("T1", 0),))
    assert not check_embedding(inst, CHERRY, {"r": ("r", ()), "x": v0, "y": v0})
    assert not check_embedding(inst, CHERRY, {"r": v0, "x": ("r", ()), "y": ("v", (("T1", 1),))})


def test_disjoint_paths_share_only_endpoints():
    g = _inst([("s", "a"), ("a", "t"), ("s", "b"), ("b", "t"), ("s", "t")])
    src, sinks = ("s", ()), [("t", ())]
    assert oracle_disjoint_paths(g, src, sinks, 2, 2, "exactly")
    assert not oracle_disjoint_paths(g, src, sinks, 3, 2, "exactly")
    assert oracle_disjoint_paths(g, src, sinks, 3, 2, "at_most")
    hub = _inst([("s", "a"), ("a", "t"), ("s", "t")])
    assert not oracle_disjoint_paths(hub, src, sinks, 2, 2, "exactly")
    assert check_paths(g, [[src, ("a", ()), ("t", ())], [src, ("t", ())]], src, sinks, 2, 2, "at_most")
    assert not check_paths(g, [[src, ("a", ()), ("t", ())], [src, ("a", ()), ("t", ())]], src, sinks, 2, 2, "at_most")


def test_reachability_and_distances():
    g = _inst([("s", "a", 4), ("a", "b", 1), ("s", "b", 7), ("c", "s")])
    assert oracle_reachable(g, ("s", ())) == {("s", ()), ("a", ()), ("b", ())}
    assert oracle_distances(g, ("s", ()))[("b", ())] == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_flow_matches_cut_enumeration(seed):
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(rng.randint(3, 9))]
    edges = [(a, b, rng.randint(1, 4)) for a in names for b in names if a != b and rng.random() < 0.3]
    g = _inst(edges) if edges else _inst([(names[0], names[-1], 1)])
    verts = list(g.vertices)
    s, t = verts[0], verts[-1]
    rest = verts[1:-1]
    best = min(
        cut_weight(g, {s} | {v for v, b in zip(rest, bits) if b}) for bits in itertools.product((0, 1), repeat=len(rest))
    )
    assert oracle_flow(g, [s], [t]) == best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_mincut_matches_bipartitions(seed):
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(rng.randint(2, 8))]
    edges = [(a, b, rng.randint(1, 4)) for a, b in itertools.combinations(names, 2) if rng.random() < 0.5]
    g = _inst(edges + [(names[0], names[1], 1)], directed=False)
    verts = list(g.vertices)
    best = min(
        cut_value_of_side(g, {verts[0]} | {v for v, b in zip(verts[1:], bits) if b})
        for bits in itertools.product((0, 1), repeat=len(verts) - 1)
        if not all(bits)
    )
    assert oracle_mincut(g) == best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_tree_oracle_matches_permutation_search(seed):
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(rng.randint(1, 6))]
    g = _inst([(a, b) for a in names for b in names if a != b and rng.random() < 0.35] or [(names[0], names[0] + "'")])
    k = rng.randint(1, 4)
    nodes = [f"a{i}" for i in range(k)]
    pattern = TreePattern.from_parents(nodes, {nodes[i]: nodes[rng.randrange(i)] for i in range(1, k)})
    root = g.vertices[0]
    brute = any(
        check_embedding(g, pattern, dict(zip(nodes, combo)))
        for combo in itertools.permutations(g.vertices, k)
        if combo[0] == root
    )
    assert (oracle_tree_embedding(g, pattern, roots=[root]) is not None) == brute
