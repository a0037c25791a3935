from pathlib import Path

import networkx as nx
import pytest

from pgt.core_model import ParametricGraphTemplate, WeightedGraph
from pgt.formats import parse_pgt

DATA = Path(__file__).parent / "data"


def graph(edges, vertices=(), directed=False):
    """Unit-weight graph from ``(u, v)`` pairs plus optional isolated vertices."""
    vs = list(dict.fromkeys([*vertices, *(x for e in edges for x in e[:2])]))
    return WeightedGraph(directed, tuple(vs), tuple((e[0], e[1], e[2] if len(e) > 2 else 1) for e in edges))


def same_graph(g1, g2) -> bool:
    """Exact isomorphism respecting direction, parallel edges and weights."""

    def build(g):
        h = nx.MultiDiGraph() if g.directed else nx.MultiGraph()
        h.add_nodes_from(g.vertices)
        h.add_edges_from((u, v, {"w": w}) for u, v, w in g.edges)
        return h

    if g1.directed != g2.directed:
        return False
    return nx.is_isomorphic(build(g1), build(g2), edge_match=nx.algorithms.isomorphism.categorical_multiedge_match("w", None))


def star(param, directed=False, weight=1):
    """root {r}, child {v} with the given parameter, one edge r-v."""
    return ParametricGraphTemplate.build(directed, [("T0", None, 1), ("T1", "T0", param)], {"r": "T0", "v": "T1"}, [("r", "v", weight)])


def loop(param, delta, directed=True):
    """Single child template {v} with a sibling self-loop."""
    return ParametricGraphTemplate.build(directed, [("T0", None, 1), ("T1", "T0", param)], {"v": "T1"}, [], [("v", "v", delta)])


@pytest.fixture
def fig1():
    return parse_pgt(DATA / "fig1.pgt")


def iso_model(rng, max_instances=14):
    """Random model the instance-isomorphism DP accepts, with a small instantiation."""
    from pgt.core_model import ModelError
    from pgt.generators import random_model
    from pgt.instance_iso import _Model

    while True:
        m = random_model(rng, n=rng.randint(2, 5), m=rng.randint(1, 7), templates=rng.randint(1, 3), max_param=3, directed=False, min_param=1)
        seen, keep = set(), []
        for e in m.edges:
            key = frozenset((e.tail, e.head))
            if e.tail != e.head and key not in seen:
                seen.add(key)
                keep.append(e)
        m = m.replace(edges=tuple(keep))
        try:
            _Model(m)
        except ModelError:
            continue
        if 2 <= m.total_instances() <= max_instances:
            return m


def perturb(rng, g, kind):
    """Add, remove or swap one edge of a simple undirected graph; None if impossible."""
    pairs = [frozenset(e[:2]) for e in g.edges]
    present = set(pairs)
    verts = list(g.vertices)
    if kind == "add":
        free = [frozenset((a, b)) for i, a in enumerate(verts) for b in verts[i + 1 :] if frozenset((a, b)) not in present]
        if not free:
            return None
        pairs.append(rng.choice(free))
    elif kind == "remove":
        if not pairs:
            return None
        pairs.pop(rng.randrange(len(pairs)))
    else:
        for _ in range(50):
            if len(pairs) < 2:
                return None
            i, j = rng.sample(range(len(pairs)), 2)
            (a, b), (c, d) = sorted(pairs[i], key=str), sorted(pairs[j], key=str)
            if rng.random() < 0.5:
                c, d = d, c
            if len({a, b, c, d}) < 4 or frozenset((a, d)) in present or frozenset((c, b)) in present:
                continue
            pairs[i], pairs[j] = frozenset((a, d)), frozenset((c, b))
            break
        else:
            return None
    return WeightedGraph(False, g.vertices, tuple((*sorted(p, key=str), 1) for p in pairs))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.REPORT):
        terminalreporter.write_line(mod.REPORT[n])
