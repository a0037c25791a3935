"""Brute-force reference answers computed on explicit instantiations.

These are slow on purpose and share as little code as possible with the
template algorithms: flows, cuts and components go through networkx, the
instantiation can be rebuilt by literal leaf-first rewriting, and pattern
questions are answered by exhaustive backtracking.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from fractions import Fraction
from typing import Iterable

import networkx as nx

from .core_model import INF, ModelError, ParametricGraphTemplate, WeightedGraph, tid_key

__all__ = [
    "oracle_flow",
    "oracle_mincut",
    "cut_value_of_side",
    "oracle_components",
    "oracle_tree_embedding",
    "oracle_tree_occurs",
    "check_embedding",
    "oracle_disjoint_paths",
    "check_paths",
    "oracle_reachable",
    "oracle_distances",
    "rewrite_instantiate",
    "zero_address",
]


def _scale(weights: Iterable) -> int:
    lcm = 1
    for w in weights:
        if w != INF:
            lcm = math.lcm(lcm, Fraction(w).denominator)
    return lcm


def oracle_flow(graph: WeightedGraph, sources, sinks):
    """Max flow from a super-source over ``sources`` to a super-sink over ``sinks``."""
    sources, sinks = set(sources), set(sinks)
    if sources & sinks:
        raise ModelError("sources and sinks overlap")
    factor = _scale(w for _, _, w in graph.edges)
    g = nx.DiGraph()
    g.add_nodes_from(graph.vertices)

    def add(u, v, w):
        if u == v:
            return
        if w == INF:
            g.add_edge(u, v)
            g[u][v].pop("capacity", None)
            g[u][v]["inf"] = True
            return
        c = int(Fraction(w) * factor)
        if g.has_edge(u, v):
            if "inf" not in g[u][v]:
                g[u][v]["capacity"] += c
        else:
            g.add_edge(u, v, capacity=c)

    for u, v, w in graph.edges:
        add(u, v, w)
        if not graph.directed:
            add(v, u, w)
    src, snk = ("__source__",), ("__sink__",)
    for x in sources:
        g.add_edge(src, x)
    for x in sinks:
        g.add_edge(x, snk)
    try:
        value = nx.maximum_flow_value(g, src, snk)
    except nx.NetworkXUnbounded:
        return INF
    return Fraction(value, factor)


def oracle_mincut(graph: WeightedGraph):
    """Global minimum cut of an undirected graph (0 when disconnected)."""
    if graph.directed:
        raise ModelError("global minimum cut needs an undirected graph")
    if len(graph.vertices) < 2:
        raise ModelError("a cut needs at least two vertices")
    factor = _scale(w for _, _, w in graph.edges)
    g = nx.Graph()
    g.add_nodes_from(graph.vertices)
    for u, v, w in graph.edges:
        if u == v:
            continue
        c = int(Fraction(w) * factor)
        if g.has_edge(u, v):
            g[u][v]["weight"] += c
        else:
            g.add_edge(u, v, weight=c)
    if not nx.is_connected(g):
        return Fraction(0)
    value, _ = nx.stoer_wagner(g)
    return Fraction(value, factor)


def cut_value_of_side(graph: WeightedGraph, side) -> Fraction:
    side = set(side)
    if not side or len(side) == len(graph.vertices):
        raise ModelError("side must be a proper nonempty subset")
    return sum((Fraction(w) for u, v, w in graph.edges if (u in side) != (v in side)), Fraction(0))


def oracle_components(graph: WeightedGraph) -> int:
    g = nx.Graph()
    g.add_nodes_from(graph.vertices)
    g.add_edges_from((u, v) for u, v, _ in graph.edges)
    return nx.number_connected_components(g)


def _successors(graph: WeightedGraph) -> dict:
    succ = defaultdict(list)
    for u, v, _ in graph.edges:
        if v not in succ[u]:
            succ[u].append(v)
        if not graph.directed and u not in succ[v]:
            succ[v].append(u)
    return succ


def zero_address(pgt: ParametricGraphTemplate, v: str) -> tuple:
    return tuple((t, 0) for t in pgt.chain(v))


def oracle_tree_embedding(graph: WeightedGraph, pattern, root_origin=None, roots=None):
    """An injective map of ``pattern`` into ``graph`` rooted at a chosen vertex.

    Candidates for the pattern root are ``roots`` if given, else every
    instantiated vertex whose origin is ``root_origin``. Returns the map or
    ``None``.
    """
    succ = _successors(graph)
    order = pattern.preorder()
    parent = pattern.parent
    if roots is None:
        roots = [x for x in graph.vertices if x[0] == root_origin]
    emb: dict = {}
    used: set = set()

    def go(i):
        if i == len(order):
            return True
        a = order[i]
        for y in succ[emb[parent[a]]]:
            if y in used:
                continue
            emb[a] = y
            used.add(y)
            if go(i + 1):
                return True
            used.discard(y)
        emb.pop(a, None)
        return False

    for r in roots:
        emb.clear()
        used.clear()
        emb[order[0]] = r
        used.add(r)
        if go(1):
            return dict(emb)
    return None


def oracle_tree_occurs(graph: WeightedGraph, pattern, root_origin) -> bool:
    return oracle_tree_embedding(graph, pattern, root_origin) is not None


def check_embedding(graph: WeightedGraph, pattern, emb, root_origin=None) -> bool:
    """Is ``emb`` an injective, edge-preserving map of the whole pattern?"""
    if set(emb) != set(pattern.children):
        return False
    if len(set(emb.values())) != len(emb):
        return False
    if root_origin is not None and emb[pattern.root][0] != root_origin:
        return False
    vertices = set(graph.vertices)
    if not all(x in vertices for x in emb.values()):
        return False
    arcs = set()
    for u, v, _ in graph.edges:
        arcs.add((u, v))
        if not graph.directed:
            arcs.add((v, u))
    return all((emb[a], emb[b]) in arcs for a, b in pattern.edges())


def oracle_disjoint_paths(graph: WeightedGraph, source, sinks, k: int, length: int, mode: str = "exactly") -> bool:
    """Are there ``k`` paths from ``source`` to the sink set, internally disjoint?

    All sink vertices act as one merged sink. ``exactly`` asks for paths of
    exactly ``length`` edges, ``at_most`` for 1 to ``length`` edges.
    """
    return _find_paths(graph, source, sinks, k, length, mode) is not None


def _find_paths(graph, source, sinks, k, length, mode):
    sinks = set(sinks)
    succ = _successors(graph)
    allowed = {length} if mode == "exactly" else set(range(1, length + 1))
    direct = [(source, y) for u, y, _ in graph.edges if u == source and y in sinks]
    if not graph.directed:
        direct += [(source, u) for u, y, _ in graph.edges if y == source and u in sinks]
    found = [[a, b] for a, b in direct] if 1 in allowed else []
    if len(found) >= k:
        return found[:k]
    need = k - len(found)
    used = {source} | sinks
    chosen: list = []

    def paths_from(first):
        # simple paths source, first, ..., x, sink with fresh internal vertices
        stack = [(first, [source, first])]
        while stack:
            x, path = stack.pop()
            hops = len(path) - 1
            if hops + 1 in allowed:
                for y in succ[x]:
                    if y in sinks:
                        yield path + [y]
                        break
            if hops + 1 < max(allowed):
                for y in succ[x]:
                    if y not in used and y not in path:
                        stack.append((y, path + [y]))

    firsts = [y for y in succ[source] if y not in used]

    def go(start):
        if len(chosen) == need:
            return True
        for i in range(start, len(firsts)):
            f = firsts[i]
            if f in used:
                continue
            for p in paths_from(f):
                inner = p[1:-1]
                if any(x in used for x in inner):
                    continue
                used.update(inner)
                chosen.append(p)
                if go(i + 1):
                    return True
                chosen.pop()
                used.difference_update(inner)
        return False

    return found + chosen if go(0) else None


def check_paths(graph: WeightedGraph, paths, source, sinks, k: int, length: int, mode: str) -> bool:
    """Certify a path family: endpoints, lengths, edges and internal disjointness."""
    sinks = set(sinks)
    if len(paths) < k:
        return False
    arcs = defaultdict(int)
    for u, v, _ in graph.edges:
        arcs[(u, v)] += 1
        if not graph.directed:
            arcs[(v, u)] += 1
    seen: set = set()
    direct = 0
    for p in paths:
        hops = len(p) - 1
        if p[0] != source or p[-1] not in sinks:
            return False
        if (mode == "exactly" and hops != length) or not 1 <= hops <= length:
            return False
        if any(arcs[(a, b)] == 0 for a, b in zip(p, p[1:])):
            return False
        inner = p[1:-1]
        if hops == 1:
            direct += 1
        if len(set(inner)) != len(inner) or seen & set(inner) or source in inner or sinks & set(inner):
            return False
        seen |= set(inner)
    per_pair = defaultdict(int)
    for p in paths:
        if len(p) == 2:
            per_pair[(p[0], p[1])] += 1
    return all(arcs[pair] >= c for pair, c in per_pair.items())


def oracle_reachable(graph: WeightedGraph, source) -> set:
    succ = _successors(graph)
    seen = {source}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in succ[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def oracle_distances(graph: WeightedGraph, source) -> dict:
    g = nx.DiGraph() if graph.directed else nx.Graph()
    g.add_nodes_from(graph.vertices)
    for u, v, w in graph.edges:
        if g.has_edge(u, v):
            g[u][v]["weight"] = min(g[u][v]["weight"], Fraction(w))
        else:
            g.add_edge(u, v, weight=Fraction(w))
    return dict(nx.single_source_dijkstra_path_length(g, source))


def rewrite_instantiate(pgt: ParametricGraphTemplate) -> WeightedGraph:
    """Instantiate by repeatedly replicating a leaf template, as in the model's definition.

    Leaves are taken in ascending template id. Vertices come out as
    ``(origin, address)`` with the outermost template first, matching
    :func:`pgt.core_model.instantiate`.
    """
    tree = pgt.tree
    alive = set(pgt.params)
    children = {t: set(cs) for t, cs in tree.children.items()}

    def home(origin):
        t = pgt.vertex_template[origin]
        while t not in alive:
            t = tree.parent[t]
        return t

    vertices = [(v, ()) for v in pgt.vertex_template]
    edges = [((e.tail, ()), (e.head, ()), e.weight, None) for e in pgt.edges]
    edges += [((e.tail, ()), (e.head, ()), e.weight, e.delta) for e in pgt.sibling_edges]
    while len(alive) > 1:
        leaf = min((t for t in alive if t != tree.root and not children[t]), key=tid_key)
        p = pgt.params[leaf]
        inside = {x for x in vertices if home(x[0]) == leaf}

        def copy(x, j):
            return (x[0], ((leaf, j),) + x[1])

        vertices = [y for x in vertices for y in ([copy(x, j) for j in range(p)] if x in inside else [x])]
        new_edges = []
        for a, b, w, delta in edges:
            ia, ib = a in inside, b in inside
            if ia and ib:
                for j in range(p):
                    jb = j if delta is None else (j + delta) % p
                    new_edges.append((copy(a, j), copy(b, jb), w, None))
            elif ia:
                new_edges += [(copy(a, j), b, w, delta) for j in range(p)]
            elif ib:
                new_edges += [(a, copy(b, j), w, delta) for j in range(p)]
            else:
                new_edges.append((a, b, w, delta))
        edges = new_edges
        alive.discard(leaf)
        children[tree.parent[leaf]].discard(leaf)
    # sibling edges left in the root template shift by 0 mod 1
    final = tuple((a, b, w) for a, b, w, _ in edges)
    return WeightedGraph(pgt.directed, tuple(vertices), final)
