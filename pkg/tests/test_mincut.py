import itertools
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from pgt.core_model import ParametricGraphTemplate, WeightedGraph, instantiate
from pgt.generators import random_model
from pgt.maxflow import cut_weight
from pgt.mincut import min_cut, mincut_cross, mincut_no_cross, normalize_for_cuts, solve_global_mincut, witness_instances
from pgt.oracles import cut_value_of_side, oracle_mincut

from conftest import graph, star


def _root_model(edges):
    names = sorted({x for e in edges for x in e[:2]})
    return ParametricGraphTemplate.build(False, [("T0", None, 1)], {v: "T0" for v in names}, edges)


def test_small_graphs():
    assert solve_global_mincut(graph([("a", "b"), ("b", "c"), ("c", "a")]))[0] == 2
    assert solve_global_mincut(graph([("a", "b"), ("b", "c"), ("c", "d")]))[0] == 1


def test_disconnected_graph_has_zero_cut():
    value, side = solve_global_mincut(graph([("a", "b")], vertices=["c"]))
    assert value == 0 and side


def test_star_cases():
    m = star(5)
    assert mincut_no_cross(m).value == 1
    # the child becomes a parameter-1 root in its own parametric subgraph
    assert mincut_cross(m).value == 1
    r = min_cut(m)
    assert (r.value, r.case_tag) == (1, "no_cross")
    assert oracle_mincut(instantiate(m)) == 1


def test_root_only_models_are_plain_cuts():
    c4 = _root_model([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
    assert min_cut(c4).value == 2 == mincut_cross(c4).value == mincut_no_cross(c4).value


def test_triangle_child_cut_inside_one_instance():
    m = ParametricGraphTemplate.build(
        False, [("T0", None, 1), ("T1", "T0", 2)], {"r": "T0", "x": "T1", "y": "T1", "z": "T1"},
        [("r", "x", 10), ("x", "y"), ("y", "z"), ("z", "x")],
    )
    assert oracle_mincut(instantiate(m)) == 2
    assert mincut_no_cross(m).value == 2
    assert min_cut(m).value == 2


def test_two_level_model():
    m = ParametricGraphTemplate.build(
        False, [("T0", None, 1), ("T1", "T0", 2), ("T2", "T1", 3)], {"r": "T0", "a": "T1", "p": "T2", "q": "T2"},
        [("r", "a", 4), ("a", "p", 2), ("p", "q", 1)],
    )
    assert oracle_mincut(instantiate(m)) == 1
    assert mincut_cross(m).value == 1 == min_cut(m).value


def test_parameter_one_child_on_cycle():
    m = ParametricGraphTemplate.build(
        False, [("T0", None, 1), ("T1", "T0", 1)], {"a": "T0", "b": "T0", "c": "T0", "v": "T1"},
        [("a", "b"), ("b", "c"), ("c", "a"), ("a", "v", 3)],
    )
    assert min_cut(m).value == oracle_mincut(instantiate(m)) == 2


def test_disconnected_instantiation():
    m = ParametricGraphTemplate.build(False, [("T0", None, 1), ("T1", "T0", 2)], {"v": "T1", "w": "T1"}, [("v", "w")])
    assert min_cut(m).value == 0


def test_normalization_splits_disconnected_templates():
    m = ParametricGraphTemplate.build(
        False, [("T0", None, 1), ("T1", "T0", 2)], {"r": "T0", "x": "T1", "y": "T1"}, [("r", "x"), ("r", "y")]
    )
    norm, _ = normalize_for_cuts(m)
    assert len(norm.templates) == 3
    assert min_cut(m).value == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_solver_matches_bipartition_enumeration(seed):
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(8)]
    edges = [(a, b, rng.randint(1, 5)) for a, b in itertools.combinations(names, 2) if rng.random() < 0.4]
    g = WeightedGraph(False, tuple(names), tuple(edges))
    want = min(
        cut_weight(g, {names[0]} | {v for v, b in zip(names[1:], bits) if b})
        for bits in itertools.product((0, 1), repeat=7)
        if not all(bits)
    )
    value, side = solve_global_mincut(g)
    assert value == want == cut_weight(g, side)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_min_cut_matches_oracle_with_witness(seed):
    rng = random.Random(seed)
    m = random_model(rng, n=rng.randint(2, 8), m=rng.randint(1, 14), templates=rng.randint(1, 4), max_param=3, directed=False, max_weight=4)
    inst = instantiate(m)
    r = min_cut(m)
    assert r.value == oracle_mincut(inst)
    side = witness_instances(m, r, inst)
    assert 0 < len(side) < len(inst.vertices)
    assert cut_value_of_side(inst, side) == r.value
