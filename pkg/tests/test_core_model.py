import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgt.core_model import (
    BudgetExceeded,
    ModelError,
    ParametricGraphTemplate,
    boundary_vertices,
    from_sets,
    instance_count,
    instantiate,
    is_acyclic,
    is_template_acyclic,
    template_of,
    validate,
)
from pgt.generators import random_model, random_sibling_model
from pgt.oracles import rewrite_instantiate

from conftest import loop, star


def test_fig1_validates(fig1):
    assert validate(fig1).ok
    assert fig1.params == {"T0": 1, "T1": 2, "T2": 2, "T3": 3}


def test_single_template_validates():
    m = ParametricGraphTemplate.build(True, [("T0", None, 1)], {"a": "T0", "b": "T0"})
    assert validate(m).ok


def test_non_laminar_sets_rejected():
    with pytest.raises(ModelError, match="non-laminar pair"):
        from_sets(False, {"A": {"a", "b"}, "B": {"b", "c"}}, {"A": 2, "B": 2})


def test_skipping_edge_reported(fig1):
    bad = fig1.replace(edges=fig1.edges + (type(fig1.edges[0])("a", "e"),))
    report = validate(bad)
    assert not report.ok
    assert any("skipping edge" in v for v in report.violations)


def test_template_of(fig1):
    assert template_of(fig1, "e") == "T3"
    assert template_of(fig1, "a") == "T0"
    single = ParametricGraphTemplate.build(False, [("T0", None, 1)], {"x": "T0"})
    assert template_of(single, "x") == "T0"


def test_boundary_vertices(fig1):
    assert boundary_vertices(star(3), "T1") == {"r"}
    lone = ParametricGraphTemplate.build(False, [("T0", None, 1), ("T1", "T0", 2)], {"r": "T0", "v": "T1"})
    assert boundary_vertices(lone, "T1") == set()
    # T0 vertices with an edge into {c, d, e}: a -> c and d -> g
    assert boundary_vertices(fig1, "T2") == {"a", "g"}


def test_fig1_instantiation(fig1):
    inst = instantiate(fig1)
    assert len(inst.vertices) == 16
    assert inst.multiplicities() == {"a": 1, "b": 2, "c": 2, "d": 2, "e": 6, "f": 1, "g": 1, "i": 1}


def test_star_instantiation():
    inst = instantiate(star(3, directed=True))
    r = ("r", ())
    assert sorted(inst.edges) == sorted((r, ("v", (("T1", j),)), 1) for j in range(3))


def test_sibling_loop_instantiation():
    inst = instantiate(loop(4, 2))
    pairs = {(a[1][0][1], b[1][0][1]) for a, b, _ in inst.edges}
    assert pairs == {(j, (j + 2) % 4) for j in range(4)}


def test_instance_count(fig1):
    assert instance_count(fig1, "e") == 6
    assert instance_count(fig1, "a") == 1
    assert instance_count(fig1, "b") == 2


def test_budget_enforced():
    with pytest.raises(BudgetExceeded):
        instantiate(star(50), budget=10)


def test_template_acyclic_examples():
    tree = ParametricGraphTemplate.build(
        True, [("T0", None, 1), ("T1", "T0", 2)], {"s": "T0", "t": "T0", "v": "T1"}, [("s", "v"), ("v", "t")]
    )
    assert is_template_acyclic(tree)
    reenter = ParametricGraphTemplate.build(
        True, [("T0", None, 1), ("T1", "T0", 2)], {"s": "T0", "v": "T1"}, [("s", "v"), ("v", "s")]
    )
    assert not is_template_acyclic(reenter)
    inner = ParametricGraphTemplate.build(
        True, [("T0", None, 1), ("T1", "T0", 2)], {"s": "T0", "a": "T1", "b": "T1"}, [("s", "a"), ("a", "b"), ("b", "a")]
    )
    assert is_template_acyclic(inner)
    assert not is_acyclic(inner)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_instance_counts_are_parameter_products(seed, directed):
    rng = random.Random(seed)
    m = random_model(rng, n=rng.randint(1, 7), m=rng.randint(0, 10), templates=rng.randint(1, 4), max_param=3, directed=directed)
    inst = instantiate(m)
    for v in m.vertices:
        expect = 1
        for t in m.chain(v):
            expect *= m.params[t]
        assert inst.multiplicities()[v] == expect == instance_count(m, v)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_instantiation_matches_rewrite_semantics(seed):
    rng = random.Random(seed)
    m = random_sibling_model(rng, n=rng.randint(1, 6), m=rng.randint(0, 8), templates=rng.randint(1, 3), max_param=4)
    a, b = instantiate(m), rewrite_instantiate(m)
    assert Counter(a.vertices) == Counter(b.vertices)
    assert Counter(a.edges) == Counter(b.edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_edges_agree_on_shared_ancestors(seed):
    rng = random.Random(seed)
    m = random_model(rng, n=6, m=9, templates=4, max_param=3)
    for (u, au), (v, av), _ in instantiate(m).edges:
        shared = set(m.chain(u)) & set(m.chain(v))
        assert {x for x in au if x[0] in shared} == {x for x in av if x[0] in shared}
