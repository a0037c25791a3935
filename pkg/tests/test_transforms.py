import random
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgt.core_model import INF, ModelError, ParametricGraphTemplate, instantiate
from pgt.generators import random_model
from pgt.transforms import (
    edge_reweight,
    induced_parametric_subgraph,
    instance_merge,
    lift_instance,
    upwards_partial_instantiation,
)

from conftest import loop, same_graph, star


def _weights(graph):
    return {(u, v): w for u, v, w in graph.edges}


def test_reweight_scales_by_parameter_products(fig1):
    w = _weights(edge_reweight(fig1))
    assert w[("a", "b")] == 2
    assert w[("c", "e")] == 6
    assert w[("e", "d")] == 6
    assert w[("f", "i")] == 1


def test_reweight_identity_on_root_models():
    m = ParametricGraphTemplate.build(True, [("T0", None, 1)], {"a": "T0", "b": "T0"}, [("a", "b", 3)])
    assert _weights(edge_reweight(m)) == {("a", "b"): 3}


def test_merge_of_root_vertex_is_identity(fig1):
    assert instance_merge(fig1, "a") == fig1


def test_merge_fig1_pushes_e_to_root(fig1):
    m = instance_merge(fig1, "e")
    assert m.template_of("e") == "T0"
    dummies = [v for v in m.vertices if v not in fig1.vertex_template]
    assert Counter(m.template_of(v) for v in dummies) == {"T3": 2, "T2": 2}
    assert all(e.weight == INF for e in m.edges if e.tail in dummies and e.head in dummies + ["e"])


def _contract_infinite(inst):
    g = nx.MultiGraph() if not inst.directed else nx.MultiDiGraph()
    g.add_nodes_from(inst.vertices)
    g.add_edges_from((u, v) for u, v, w in inst.edges if w != INF)
    ties = nx.Graph()
    ties.add_nodes_from(inst.vertices)
    ties.add_edges_from((u, v) for u, v, w in inst.edges if w == INF)
    rep = {}
    for comp in nx.connected_components(ties):
        head = min(comp, key=repr)
        for x in comp:
            rep[x] = head
    return Counter((rep[u], rep[v]) for u, v in g.edges()), len(set(rep.values()))


def test_merge_contracts_to_merged_instantiation():
    m = instance_merge(star(2), "v")
    edges, n = _contract_infinite(instantiate(m))
    assert n == 2
    assert sum(edges.values()) == 2  # both r-v edges survive as parallel edges


def test_upi_from_root_vertex_is_identity(fig1):
    assert upwards_partial_instantiation(fig1, "a") == fig1


def test_upi_star_leaves_residual_template():
    m = upwards_partial_instantiation(star(3), "v")
    assert m.template_of("v") == m.root
    (child,) = [t for t in m.params if t != m.root]
    assert m.params[child] == 2
    assert not m.sibling_edges
    assert same_graph(instantiate(m), instantiate(star(3)))


def test_upi_fig1_from_e(fig1):
    m = upwards_partial_instantiation(fig1, "e")
    assert m.template_of("e") == m.root
    assert same_graph(instantiate(m), instantiate(fig1))


def test_lift_rejects_sibling_edges():
    with pytest.raises(ModelError):
        upwards_partial_instantiation(loop(4, 1), "v")


def test_induced_subgraph_of_root(fig1):
    sub = induced_parametric_subgraph(fig1, "T0")
    assert sub.params == fig1.params
    assert dict(sub.vertex_template) == dict(fig1.vertex_template)
    assert Counter(sub.edges) == Counter(fig1.edges)


def test_induced_subgraph_fig1_t2(fig1):
    sub = induced_parametric_subgraph(fig1, "T2")
    assert sub.params == {"T2": 1, "T3": 3}
    assert set(sub.vertices) == {"c", "d", "e", "a", "g"}
    assert len(instantiate(sub).vertices) == 4 + 3


def test_induced_subgraph_merged_star():
    sub = induced_parametric_subgraph(star(5), "T1", merge_boundary=True)
    assert len(sub.vertices) == 2
    assert sub.params == {"T1": 1}


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_upi_preserves_instantiation(seed, directed):
    rng = random.Random(seed)
    m = random_model(rng, n=rng.randint(1, 6), m=rng.randint(0, 8), templates=rng.randint(1, 4), max_param=3, directed=directed)
    v = rng.choice(m.vertices)
    lifted = upwards_partial_instantiation(m, v)
    assert lifted.template_of(v) == lifted.root
    assert same_graph(instantiate(lifted), instantiate(m))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_lift_of_chosen_instance_maps_back(seed):
    rng = random.Random(seed)
    m = random_model(rng, n=5, m=7, templates=3, max_param=3, directed=True)
    v = rng.choice(m.vertices)
    inst = instantiate(m)
    target = rng.choice(inst.instances(v))
    lifted = lift_instance(m, v, target[1])
    assert lifted.model.template_of(v) == lifted.model.root
    image = {x: lifted.map_instance(*x) for x in inst.vertices}
    assert image[target] == (v, ())
    out = instantiate(lifted.model)
    assert sorted(image.values()) == sorted(out.vertices)
    assert Counter((image[a], image[b], w) for a, b, w in inst.edges) == Counter(out.edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_merge_contract_matches_merged_instantiation(seed):
    rng = random.Random(seed)
    m = random_model(rng, n=rng.randint(2, 5), m=rng.randint(1, 7), templates=rng.randint(1, 3), max_param=3, directed=False)
    v = rng.choice(m.vertices)
    got, n = _contract_infinite(instantiate(instance_merge(m, v)))
    inst = instantiate(m)
    rep = {x: ("merged",) if x[0] == v else x for x in inst.vertices}
    want = Counter((rep[a], rep[b]) for a, b, _ in inst.edges)
    assert n == len(set(rep.values()))
    assert sum(got.values()) == sum(want.values())
    assert sorted(Counter(x for e in got.elements() for x in e).values()) == sorted(
        Counter(x for e in want.elements() for x in e).values()
    )
