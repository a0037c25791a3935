"""Decide whether a graph is an instantiation of a given template structure.

The decision runs a dynamic program over a tree decomposition of the target.
A state at a decomposition node records, for every instance that still has
a vertex in the node's bag (an active instance), which of its own vertices are
mapped to bag vertices, which were matched further down, and which are still
unmatched, plus how many of its child instances were already completed. An
instance leaves the state only when it is complete, so every accepted run
assembles a full copy of the instance tree together with a bijection.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

from .core_model import (
    BudgetExceeded,
    ModelError,
    ParametricGraphTemplate,
    ValidationReport,
    WeightedGraph,
    instantiate,
    tid_key,
)

__all__ = [
    "TreeDecomposition",
    "StateLimitExceeded",
    "tree_decomposition",
    "elimination_width",
    "validate_decomposition",
    "instance_iso_decide",
    "naive_instance_iso",
    "instantiated_edge_count",
    "DEFAULT_STATE_LIMIT",
]

DEFAULT_STATE_LIMIT = 200_000
EXACT_LIMIT = 20


class StateLimitExceeded(BudgetExceeded):
    """The dynamic program produced more states at one node than allowed."""


@dataclass
class TreeDecomposition:
    bags: dict  # node id -> frozenset of target vertices
    children: dict  # node id -> list of child ids
    root: str

    @classmethod
    def from_links(cls, bags, links) -> "TreeDecomposition":
        bags = {str(k): frozenset(v) for k, v in bags.items()}
        children = {k: [] for k in bags}
        has_parent = set()
        for p, c in links:
            if p not in bags or c not in bags:
                raise ModelError(f"link {p} {c} names an unknown bag")
            children[p].append(c)
            has_parent.add(c)
        roots = [k for k in bags if k not in has_parent]
        if len(roots) != 1:
            raise ModelError(f"decomposition must have exactly one root bag, found {len(roots)}")
        return cls(bags, children, roots[0])

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags.values()), default=0) - 1

    def postorder(self) -> list:
        out, stack = [], [(self.root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                out.append(node)
                continue
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(self.children[node]))
        return out


# --- decompositions ------------------------------------------------------------


def _simple_adjacency(graph: WeightedGraph) -> dict:
    adj = {v: set() for v in graph.vertices}
    for u, v, *_ in graph.edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _eliminate(g: dict, v) -> dict:
    nb = g[v]
    out = {}
    for x, ns in g.items():
        if x == v:
            continue
        if x in nb:
            out[x] = (ns | nb) - {x, v}
        else:
            out[x] = ns
    return out


def elimination_width(adj: dict, order) -> int:
    g = {v: set(ns) for v, ns in adj.items()}
    width = -1 if not g else 0
    for v in order:
        width = max(width, len(g[v]))
        g = _eliminate(g, v)
    return width


def _min_fill_order(adj: dict) -> list:
    g = {v: set(ns) for v, ns in adj.items()}
    order = []
    while g:
        def fill(v):
            ns = list(g[v])
            return sum(1 for i, a in enumerate(ns) for b in ns[i + 1 :] if b not in g[a])

        v = min(g, key=lambda x: (fill(x), len(g[x]), tid_key(str(x))))
        order.append(v)
        g = _eliminate(g, v)
    return order


def _degeneracy(g: dict) -> int:
    deg = {v: len(ns) for v, ns in g.items()}
    alive = set(g)
    best = 0
    while alive:
        v = min(alive, key=deg.__getitem__)
        best = max(best, deg[v])
        alive.discard(v)
        for y in g[v]:
            if y in alive:
                deg[y] -= 1
    return best


def _exact_order(adj: dict, target: int | None = None) -> list:
    """Elimination order of minimum width by branch and bound."""
    order0 = _min_fill_order(adj)
    best = [elimination_width(adj, order0), order0]
    seen: dict = {}
    floor = _degeneracy(adj)
    if target is not None:
        floor = max(floor, 0)

    def rec(g, order, width):
        if best[0] <= floor or (target is not None and best[0] <= target):
            return
        if len(g) <= width + 1:
            if width < best[0]:
                best[0], best[1] = width, order + sorted(g, key=lambda x: tid_key(str(x)))
            return
        key = frozenset(order)
        if seen.get(key, math.inf) <= width:
            return
        seen[key] = width
        if max(width, _degeneracy(g)) >= best[0]:
            return
        for v in g:
            if all(b in g[a] for a in g[v] for b in g[v] if a != b):
                # a simplicial vertex can always go first
                rec(_eliminate(g, v), order + [v], max(width, len(g[v])))
                return
        for v in sorted(g, key=lambda x: (len(g[x]), tid_key(str(x)))):
            w = max(width, len(g[v]))
            if w < best[0]:
                rec(_eliminate(g, v), order + [v], w)

    rec({v: set(ns) for v, ns in adj.items()}, [], 0)
    return best[1]


def _from_order(adj: dict, order) -> TreeDecomposition:
    pos = {v: i for i, v in enumerate(order)}
    g = {v: set(ns) for v, ns in adj.items()}
    bags, parent = {}, {}
    for v in order:
        nb = g[v]
        bags[v] = frozenset(nb | {v})
        parent[v] = min(nb, key=pos.__getitem__) if nb else None
        g = _eliminate(g, v)
    names = {v: f"b{i}" for i, v in enumerate(order)}
    children = defaultdict(list)
    roots = []
    for v in order:
        if parent[v] is None:
            roots.append(v)
        else:
            children[names[parent[v]]].append(names[v])
    out_bags = {names[v]: bags[v] for v in order}
    kids = {names[v]: children[names[v]] for v in order}
    root = names[roots[-1]]
    for r in roots[:-1]:
        # only for disconnected graphs: hang extra trees under the root
        kids[root].append(names[r])
    return _binarize(TreeDecomposition(out_bags, kids, root))


def _binarize(dec: TreeDecomposition) -> TreeDecomposition:
    bags = dict(dec.bags)
    children = {k: list(v) for k, v in dec.children.items()}
    counter = 0
    for node in list(children):
        kids = children[node]
        cur = node
        while len(kids) > 2:
            counter += 1
            extra = f"{node}.{counter}"
            bags[extra] = bags[node]
            children[cur] = [kids[0], extra]
            children[extra] = []
            cur, kids = extra, kids[1:]
        children[cur] = kids
    return TreeDecomposition(bags, children, dec.root)


def tree_decomposition(graph: WeightedGraph, width_hint: int | None = None) -> TreeDecomposition:
    """Binary tree decomposition; minimum width when the graph has at most 20 vertices.

    Larger graphs use the greedy min-fill order. ``width_hint`` lets the exact
    search stop as soon as a decomposition of at most that width is found.
    """
    adj = _simple_adjacency(graph)
    if not adj:
        raise ModelError("cannot decompose an empty graph")
    order = _exact_order(adj, width_hint) if len(adj) <= EXACT_LIMIT else _min_fill_order(adj)
    dec = _from_order(adj, order)
    validate_decomposition(graph, dec).raise_if_bad()
    return dec


def validate_decomposition(graph: WeightedGraph, dec: TreeDecomposition) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    verts = set(graph.vertices)
    seen, stack = set(), [dec.root]
    while stack:
        node = stack.pop()
        if node in seen:
            bad.append(f"bag {node} is reached twice (not a tree)")
            continue
        seen.add(node)
        stack.extend(dec.children.get(node, []))
    missing = set(dec.bags) - seen
    if missing:
        bad.append(f"bags not connected to the root: {', '.join(sorted(missing))}")
    for node, kids in dec.children.items():
        if len(kids) > 2:
            bad.append(f"bag {node} has {len(kids)} children (binary shape required)")
    for node, bag in dec.bags.items():
        extra = set(bag) - verts
        if extra:
            bad.append(f"bag {node} holds unknown vertices {sorted(map(str, extra))}")
    holders = defaultdict(set)
    for node, bag in dec.bags.items():
        for v in bag:
            holders[v].add(node)
    parent = {c: p for p, cs in dec.children.items() for c in cs}
    for v in graph.vertices:
        nodes = holders.get(v, set())
        if not nodes:
            bad.append(f"vertex {v} is in no bag")
            continue
        tops = [n for n in nodes if parent.get(n) not in nodes]
        if len(tops) != 1:
            bad.append(f"bags containing {v} do not form a connected subtree")
    for u, v, *_ in graph.edges:
        if not holders.get(u, set()) & holders.get(v, set()):
            bad.append(f"no bag contains both endpoints of edge {u} {v}")
    return report


# --- the dynamic program -------------------------------------------------------

U, C = 0, 1  # statuses; a bag vertex name means "mapped to that vertex"
SUPER = "^"


class _Model:
    """Template structure facts the dynamic program needs."""

    def __init__(self, pgt: ParametricGraphTemplate):
        if pgt.directed:
            raise ModelError("instance isomorphism needs an undirected model")
        if pgt.sibling_edges:
            raise ModelError("instance isomorphism does not support sibling edges")
        tree = pgt.tree
        self.pgt = pgt
        self.own = {t: list(vs) for t, vs in pgt.members.items()}
        self.slot = {v: i for t, vs in self.own.items() for i, v in enumerate(vs)}
        self.tmpl = dict(pgt.vertex_template)
        self.parent = {t: (tree.parent[t] if t != tree.root else SUPER) for t in pgt.params}
        self.kids = {t: list(tree.children[t]) for t in pgt.params}
        self.kids[SUPER] = [tree.root]
        self.kid_slot = {t: {c: i for i, c in enumerate(cs)} for t, cs in self.kids.items()}
        self.param = dict(pgt.params)
        self.chain = {t: [tree.root] + list(pgt.template_chain(t)) for t in pgt.params}
        self.root = tree.root
        seen = set()
        self.adj = defaultdict(set)
        for e in pgt.edges:
            key = frozenset((e.tail, e.head))
            if e.tail == e.head or key in seen:
                raise ModelError("instance isomorphism needs a simple template graph")
            seen.add(key)
            self.adj[e.tail].add(e.head)
            self.adj[e.head].add(e.tail)
        self.degree = _instantiated_degrees(pgt)
        for t in pgt.params:
            if t != tree.root and not self.own[t]:
                raise ModelError(f"template {t} owns no vertex; its instances would be disconnected")
            tset = pgt.template_set(t)
            if tset and not _connected(tset, self.adj):
                raise ModelError(f"template {t} does not induce a connected subgraph")


def _connected(verts, adj) -> bool:
    verts = set(verts)
    start = next(iter(verts))
    seen, stack = {start}, [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y in verts and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(verts)


def _instantiated_degrees(pgt: ParametricGraphTemplate) -> dict:
    own = pgt.vertex_template
    tree = pgt.tree
    deg = defaultdict(int)
    for e in pgt.edges:
        for a, b in ((e.tail, e.head), (e.head, e.tail)):
            ta, tb = own[a], own[b]
            deg[a] += pgt.params[tb] if tree.parent.get(tb) == ta and tb != tree.root else 1
    return deg


def instantiated_edge_count(pgt: ParametricGraphTemplate) -> int:
    prod = pgt.ancestor_products
    own = pgt.vertex_template
    tree = pgt.tree
    total = 0
    for e in pgt.edges:
        a, b = own[e.tail], own[e.head]
        total += prod[b] if tree.depth[b] > tree.depth[a] else prod[a]
    return total


class _Work:
    """Mutable view of one state: instances keyed by an integer handle."""

    __slots__ = ("tmpl", "bag", "st", "cnt", "sup")

    def __init__(self):
        self.tmpl, self.bag, self.st, self.cnt = {}, {}, {}, {}
        self.sup = 0

    @classmethod
    def load(cls, state):
        w = cls()
        insts, w.sup = state
        for h, (t, bag, st, cnt) in enumerate(insts):
            w.tmpl[h] = t
            w.bag[h] = set(bag)
            w.st[h] = list(st)
            w.cnt[h] = list(cnt)
        return w

    def freeze(self):
        insts = tuple(
            sorted(
                (self.tmpl[h], tuple(sorted(self.bag[h], key=str)), tuple(self.st[h]), tuple(self.cnt[h]))
                for h in self.tmpl
            )
        )
        return insts, self.sup

    def parent_of(self, h, m: _Model):
        pt = m.parent[self.tmpl[h]]
        if pt == SUPER:
            return None
        anchor = next(iter(self.bag[h]))
        for g, t in self.tmpl.items():
            if t == pt and anchor in self.bag[g]:
                return g
        raise AssertionError("active instance without active parent")

    def active_children(self, h, t, m: _Model) -> int:
        if h is None:
            return sum(1 for g in self.tmpl if self.tmpl[g] == m.root)
        return sum(1 for g in self.tmpl if self.tmpl[g] == t and self.parent_of(g, m) == h)

    def completed(self, h, t, m: _Model) -> int:
        if h is None:
            return self.sup
        return self.cnt[h][m.kid_slot[self.tmpl[h]][t]]


def _where(work: _Work, m: _Model, x):
    """``(vertex, handle)`` that bag vertex ``x`` is mapped to."""
    for h, st in work.st.items():
        for i, s in enumerate(st):
            if s == x:
                return m.own[work.tmpl[h]][i], h
    raise AssertionError(f"{x} is not mapped")


def _adjacent(work: _Work, m: _Model, u, h, w, g) -> bool:
    if w not in m.adj[u]:
        return False
    tu, tw = m.tmpl[u], m.tmpl[w]
    if tu == tw:
        return h == g
    if m.parent[tw] == tu:
        return work.parent_of(g, m) == h
    return work.parent_of(h, m) == g


def _introduce(states, x, nbrs, m: _Model, target_degree) -> set:
    out = set()
    for state in states:
        base = _Work.load(state)
        placed = {y: _where(base, m, y) for y in nbrs}
        for u in m.tmpl:
            if m.degree[u] != target_degree:
                continue
            t = m.tmpl[u]
            slot = m.slot[u]
            options = []
            for h, tt in base.tmpl.items():
                if tt == t and base.st[h][slot] == U:
                    options.append(("old", h))
            chain = m.chain[t]
            for j in range(len(chain) - 1, -1, -1):
                anchor_t = chain[j - 1] if j > 0 else SUPER
                if anchor_t == SUPER:
                    options.append(("new", None, j))
                else:
                    options += [("new", h, j) for h, tt in base.tmpl.items() if tt == anchor_t]
            for opt in options:
                work = _Work.load(state)
                if opt[0] == "old":
                    h = opt[1]
                    lineage = []
                    g = h
                    while g is not None:
                        lineage.append(g)
                        g = work.parent_of(g, m)
                else:
                    _, anchor, j = opt
                    first = chain[j]
                    if work.active_children(anchor, first, m) + work.completed(anchor, first, m) + 1 > m.param[first]:
                        continue
                    lineage = []
                    g = anchor
                    while g is not None:
                        lineage.append(g)
                        g = work.parent_of(g, m)
                    for k in range(j, len(chain)):
                        tk = chain[k]
                        h = max(work.tmpl, default=-1) + 1
                        work.tmpl[h] = tk
                        work.bag[h] = set()
                        work.st[h] = [U] * len(m.own[tk])
                        work.cnt[h] = [0] * len(m.kids[tk])
                        lineage.append(h)
                work.st[h][slot] = x
                for g in lineage:
                    work.bag[g].add(x)
                if all(_adjacent(work, m, u, h, w, gh) for w, gh in placed.values()):
                    out.add(work.freeze())
    return out


def _forget(states, x, m: _Model) -> set:
    out = set()
    for state in states:
        work = _Work.load(state)
        u, h = _where(work, m, x)
        work.st[h][m.slot[u]] = C
        chain = []
        g = h
        while g is not None:
            chain.append(g)
            g = work.parent_of(g, m)
        ok = True
        for depth, g in enumerate(chain):  # deepest first
            work.bag[g].discard(x)
            if work.bag[g]:
                continue
            t = work.tmpl[g]
            if any(s != C for s in work.st[g]) or any(
                work.cnt[g][i] != m.param[c] for i, c in enumerate(m.kids[t])
            ):
                ok = False
                break
            pt = m.parent[t]
            up = chain[depth + 1] if pt != SUPER else None
            if pt == SUPER:
                work.sup += 1
                if work.sup > 1:
                    ok = False
                    break
            else:
                i = m.kid_slot[pt][t]
                work.cnt[up][i] += 1
                if work.cnt[up][i] > m.param[t]:
                    ok = False
                    break
            del work.tmpl[g], work.bag[g], work.st[g], work.cnt[g]
        if ok:
            out.add(work.freeze())
    return out


def _signature(state):
    insts, _ = state
    return tuple((t, bag, tuple(s if isinstance(s, str) else None for s in st)) for t, bag, st, _ in insts)


def _join(left, right, m: _Model) -> set:
    index = defaultdict(list)
    for s in right:
        index[_signature(s)].append(s)
    out = set()
    for a in left:
        for b in index.get(_signature(a), ()):
            insts = []
            ok = a[1] + b[1] <= 1
            for (t, bag, sa, ca), (_, _, sb, cb) in zip(a[0], b[0]):
                if not ok:
                    break
                st = []
                for p, q in zip(sa, sb):
                    if isinstance(p, str):
                        st.append(p)
                    elif p == C and q == C:
                        ok = False
                        break
                    else:
                        st.append(C if C in (p, q) else U)
                insts.append((t, bag, tuple(st), tuple(x + y for x, y in zip(ca, cb))))
            if not ok:
                continue
            state = (tuple(insts), a[1] + b[1])
            work = _Work.load(state)
            if work.sup and any(t == m.root for t in work.tmpl.values()):
                continue
            fits = True
            for h, t in work.tmpl.items():
                for c in m.kids[t]:
                    if work.active_children(h, c, m) + work.completed(h, c, m) > m.param[c]:
                        fits = False
            if fits:
                out.add(state)
    return out


def _index_bag(bag) -> list:
    return sorted(bag, key=lambda v: tid_key(str(v)))


def instance_iso_decide(
    pgt: ParametricGraphTemplate,
    target: WeightedGraph,
    dec: TreeDecomposition | None = None,
    state_limit: int = DEFAULT_STATE_LIMIT,
    stats: dict | None = None,
) -> bool:
    """Is ``target`` isomorphic to the instantiation of ``pgt``?

    The model must be undirected and simple, with every non-root template
    owning a vertex and every template inducing a connected subgraph; these
    keep each instance connected, which is what lets a completed instance be
    dropped from the state for good. ``stats`` receives the number of states
    kept at each decomposition node.
    """
    m = _Model(pgt)
    if target.directed:
        raise ModelError("instance isomorphism needs an undirected target")
    verts = list(target.vertices)
    pairs = [frozenset((u, v)) for u, v, *_ in target.edges]
    if any(len(p) == 1 for p in pairs) or len(set(pairs)) != len(pairs):
        return False
    if len(verts) != pgt.total_instances() or len(pairs) != instantiated_edge_count(pgt):
        return False
    adj = _simple_adjacency(target)
    if len(verts) == 1:
        return True
    if not _connected(verts, adj):
        return False
    if dec is None:
        dec = tree_decomposition(target)
    validate_decomposition(target, dec).raise_if_bad()

    def check(node, states):
        if len(states) > state_limit:
            raise StateLimitExceeded(f"{len(states)} states at bag {node} exceed the limit {state_limit}")
        if stats is not None:
            stats[node] = max(stats.get(node, 0), len(states))
        return states

    def shift(states, old, new, node):
        for x in _index_bag(old - new):
            states = check(node, _forget(states, x, m))
        present = set(old & new)
        for x in _index_bag(new - old):
            states = check(node, _introduce(states, x, [y for y in adj[x] if y in present], m, len(adj[x])))
            present.add(x)
        return states

    empty = ((), 0)
    result = {}
    for node in dec.postorder():
        bag = dec.bags[node]
        kids = dec.children[node]
        if not kids:
            states = shift({empty}, frozenset(), bag, node)
        else:
            parts = [shift(result.pop(c), dec.bags[c], bag, node) for c in kids]
            states = parts[0]
            for other in parts[1:]:
                states = check(node, _join(states, other, m))
        result[node] = states
    final = shift(result[dec.root], dec.bags[dec.root], frozenset(), "^")
    return any(not insts and sup == 1 for insts, sup in final)


def naive_instance_iso(pgt: ParametricGraphTemplate, target: WeightedGraph, budget: int | None = None) -> bool:
    """Instantiate, then compare sizes and run an exact isomorphism test."""
    from .discovery import graph_isomorphic, relabel

    if pgt.directed:
        raise ModelError("instance isomorphism needs an undirected model")
    if target.directed:
        return False
    inst = instantiate(pgt, budget)
    if len(inst.vertices) != len(target.vertices) or len(inst.edges) != len(target.edges):
        return False
    if not target.vertices:
        return True
    return graph_isomorphic(relabel(inst), relabel(target))
