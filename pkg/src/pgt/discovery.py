"""Recover parametric graph templates from a flat undirected graph.

Includes an exact canonical labelling (colour refinement plus
individualization with automorphism pruning) used both for grouping
isomorphic components and for checking that discovered models instantiate
back to the input.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

from .core_model import (
    ModelError,
    ParametricGraphTemplate,
    WeightedGraph,
    boundary_vertices,
    instantiate,
    tid_key,
)

__all__ = [
    "DiscoveryConfig",
    "canonical_form",
    "graph_isomorphic",
    "group_isomorphic_components",
    "model_canonical_form",
    "discover",
    "boundary_bound",
    "relabel",
]


# --- canonical labelling ---------------------------------------------------


def _refine(adj, colors):
    n = len(colors)
    while True:
        sig = [(colors[v], tuple(sorted(colors[u] for u in adj[v]))) for v in range(n)]
        rank = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [rank[s] for s in sig]
        if len(rank) == len(set(colors)):
            return new
        colors = new


def _individualize(colors, v):
    pairs = [(c, 0 if u == v else 1) for u, c in enumerate(colors)]
    rank = {p: i for i, p in enumerate(sorted(set(pairs)))}
    return [rank[p] for p in pairs]


class _Orbits:
    def __init__(self, n):
        self.rep = list(range(n))

    def find(self, x):
        while self.rep[x] != x:
            self.rep[x] = self.rep[self.rep[x]]
            x = self.rep[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.rep[max(a, b)] = min(a, b)


def _canon(n: int, adj: list[list[int]], labels: list) -> tuple:
    keys = sorted(set(labels), key=repr)
    start = [keys.index(x) for x in labels]
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    label_key = [repr(x) for x in labels]
    state = {"first": None, "best": None}
    autos: list[list[int]] = []

    def certificate(colors):
        order = sorted(range(n), key=colors.__getitem__)
        pos = colors
        cert = (
            tuple(label_key[v] for v in order),
            tuple(sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in edges)),
        )
        return cert, order

    def dfs(colors, path):
        colors = _refine(adj, colors)
        depth = len(path)
        if len(set(colors)) == n:
            cert, order = certificate(colors)
            if state["first"] is None:
                state["first"] = state["best"] = (cert, order, path)
                return None
            for ref in (state["first"], state["best"]):
                if cert == ref[0]:
                    gamma = [0] * n
                    for i in range(n):
                        gamma[ref[1][i]] = order[i]
                    autos.append(gamma)
                    return next((i for i, (a, b) in enumerate(zip(ref[2], path)) if a != b), depth)
            if cert < state["best"][0]:
                state["best"] = (cert, order, path)
            return None
        cells = defaultdict(list)
        for v, c in enumerate(colors):
            cells[c].append(v)
        cell = min((c for c in cells.values() if len(c) > 1), key=lambda c: (len(c), colors[c[0]]))
        tried: list[int] = []
        fixed = set(path)
        for v in cell:
            if tried:
                orbits = _Orbits(n)
                for g in autos:
                    if all(g[p] == p for p in fixed):
                        for x in range(n):
                            orbits.union(x, g[x])
                if any(orbits.find(w) == orbits.find(v) for w in tried):
                    continue
            tried.append(v)
            back = dfs(_individualize(colors, v), path + [v])
            if back is not None and back < depth:
                return back
        return None

    if n == 0:
        return (0, (), ())
    dfs(start, [])
    cert = state["best"][0]
    return (n,) + cert


def _indexed(graph: WeightedGraph):
    verts = sorted(graph.vertices, key=repr)
    index = {v: i for i, v in enumerate(verts)}
    adj = [set() for _ in verts]
    for u, v, *_ in graph.edges:
        if u != v:
            adj[index[u]].add(index[v])
            adj[index[v]].add(index[u])
    return verts, index, [sorted(a) for a in adj]


def canonical_form(graph: WeightedGraph, colors=None) -> tuple:
    """Isomorphism-invariant label of an undirected simple graph.

    Parallel edges, loops and weights are ignored. ``colors`` optionally maps
    vertices to labels that the isomorphism must respect.
    """
    verts, _, adj = _indexed(graph)
    labels = [None if colors is None else colors[v] for v in verts]
    return _canon(len(verts), adj, labels)


def graph_isomorphic(g1: WeightedGraph, g2: WeightedGraph, colors1=None, colors2=None) -> bool:
    if len(g1.vertices) != len(g2.vertices):
        return False
    _, _, a1 = _indexed(g1)
    _, _, a2 = _indexed(g2)
    if sorted(map(len, a1)) != sorted(map(len, a2)):
        return False
    return canonical_form(g1, colors1) == canonical_form(g2, colors2)


def group_isomorphic_components(components, colors=None) -> list[list[int]]:
    """Indices of ``components`` grouped by isomorphism class, in first-seen order."""
    groups: dict[tuple, list[int]] = {}
    for i, comp in enumerate(components):
        groups.setdefault(canonical_form(comp, colors), []).append(i)
    return list(groups.values())


def relabel(graph: WeightedGraph) -> WeightedGraph:
    """Copy of ``graph`` with string vertex names (instantiated vertices become ``v@i.j``)."""
    from .formats import vertex_label

    name = {v: vertex_label(v) if isinstance(v, tuple) else str(v) for v in graph.vertices}
    return WeightedGraph(graph.directed, tuple(name[v] for v in graph.vertices), tuple((name[u], name[v], w) for u, v, w in graph.edges))


def model_canonical_form(pgt: ParametricGraphTemplate) -> tuple:
    """Canonical label of a model: vertices, template nodes and their links as a coloured graph."""
    verts = [("v", v) for v in pgt.vertices] + [("t", t.id) for t in pgt.templates]
    colors = {("v", v): ("v",) for v in pgt.vertices}
    for t in pgt.templates:
        colors[("t", t.id)] = ("root",) if t.parent is None else ("t", t.param)
    edges = [(("v", e.tail), ("v", e.head), 1) for e in pgt.edges]
    edges += [(("v", v), ("t", t), 1) for v, t in pgt.vertex_template.items()]
    edges += [(("t", t.id), ("t", t.parent), 1) for t in pgt.templates if t.parent is not None]
    return canonical_form(WeightedGraph(False, tuple(verts), tuple(edges)), colors)


# --- discovery ---------------------------------------------------------------


@dataclass
class DiscoveryConfig:
    beta_max: int = 1
    min_param: int = 2
    mode: str = "first"
    max_results: int = 64

    def __post_init__(self):
        if self.beta_max < 0:
            raise ModelError("beta_max must be non-negative")
        if self.min_param < 2:
            raise ModelError("min_param must be at least 2")
        if self.mode not in ("first", "all"):
            raise ModelError(f"unknown discovery mode {self.mode!r}")


@dataclass
class _Node:
    """Discovered structure: own vertices plus ``(param, child)`` pairs."""

    own: list
    children: list = field(default_factory=list)

    def trivial(self) -> bool:
        return not self.children


def _components(verts, adj):
    seen, out = set(), []
    for v in verts:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y in verts and y not in seen:
                    seen.add(y)
                    stack.append(y)
        out.append(sorted(comp, key=tid_key))
    return out


def _structures(verts: frozenset, adj, pinned: frozenset, cfg: DiscoveryConfig, trace):
    """Yield structures for the subgraph induced by ``verts``; trivial one last."""
    order = sorted(verts, key=tid_key)
    emitted = 0
    for size in range(1, cfg.beta_max + 1):
        for bset in itertools.combinations(order, size):
            b = frozenset(bset)
            rest = verts - b
            comps = _components(rest, adj)
            pieces = []
            for comp in comps:
                cset = set(comp)
                graph = WeightedGraph(False, tuple(comp), tuple((u, v, 1) for u in comp for v in adj[u] if v in cset and tid_key(u) < tid_key(v)))
                pieces.append(graph)
            colors = {v: tuple(sorted((x for x in adj[v] if x in b), key=tid_key)) for v in rest}
            own = list(b)
            groups = []
            for idx in group_isomorphic_components(pieces, colors):
                members = [comps[i] for i in idx]
                touches_pin = any(v in pinned for m in members for v in m)
                if len(idx) >= cfg.min_param and not touches_pin:
                    groups.append(members)
                else:
                    own += [v for m in members for v in m]
            if not groups:
                continue
            options = []
            for members in groups:
                rep = min(members, key=lambda m: tid_key(m[0]))
                rep_set = frozenset(rep)
                if trace is not None:
                    trace.append((len(verts), len(rep_set)))
                attached = frozenset(v for v in rep if any(x in b for x in adj[v]))
                subs = _structures(rep_set, adj, attached, cfg, trace)
                if cfg.mode == "first":
                    subs = itertools.islice(subs, 1)
                options.append([(len(members), s) for s in subs])
            for combo in itertools.product(*options):
                yield _Node(sorted(own, key=tid_key), list(combo))
                emitted += 1
                if cfg.mode == "first":
                    break
            if cfg.mode == "first" and emitted:
                return
    yield _Node(sorted(verts, key=tid_key))


def _to_model(node: _Node, edges) -> ParametricGraphTemplate:
    templates, placement = [], {}
    counter = itertools.count()

    def walk(n: _Node, parent, param):
        tid = f"T{next(counter)}"
        templates.append((tid, parent, param))
        for v in n.own:
            placement[v] = tid
        for p, child in n.children:
            walk(child, tid, p)

    walk(node, None, 1)
    kept = [(u, v) for u, v in edges if u in placement and v in placement]
    return ParametricGraphTemplate.build(False, templates, placement, kept)


def boundary_bound(pgt: ParametricGraphTemplate) -> int:
    """Largest number of vertices of one template adjacent to its child templates."""
    best = 0
    for t in pgt.templates:
        hits = set()
        for c in pgt.tree.children[t.id]:
            hits |= boundary_vertices(pgt, c)
        best = max(best, len(hits))
    return best


def discover(graph: WeightedGraph, config: DiscoveryConfig | None = None, trace: list | None = None) -> list[ParametricGraphTemplate]:
    """Models whose instantiation is isomorphic to ``graph``.

    Boundary sets are tried by increasing size, then lexicographically. With
    ``mode="first"`` the first nontrivial model is returned (or the trivial
    single-template model if none exists); ``mode="all"`` returns every
    distinct model found, trivial one included. ``trace`` collects
    ``(parent size, child size)`` for every recursive call.
    """
    cfg = config or DiscoveryConfig()
    if graph.directed:
        raise ModelError("discovery needs an undirected graph")
    g = relabel(graph)
    adj = defaultdict(set)
    edges = set()
    for u, v, _ in g.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
            edges.add((min(u, v, key=tid_key), max(u, v, key=tid_key)))
    verts = frozenset(g.vertices)
    if len(_components(verts, adj)) > 1:
        raise ModelError("discovery needs a connected graph")
    target = canonical_form(g)
    edges = sorted(edges, key=lambda e: (tid_key(e[0]), tid_key(e[1])))
    found, seen = [], set()
    for node in _structures(verts, adj, frozenset(), cfg, trace):
        model = _to_model(node, edges)
        key = model_canonical_form(model)
        if key in seen:
            continue
        seen.add(key)
        if canonical_form(relabel(instantiate(model))) != target:
            continue
        found.append(model)
        if cfg.mode == "first" or len(found) >= cfg.max_results:
            break
    return found
