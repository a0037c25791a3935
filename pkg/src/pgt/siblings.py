"""Algorithms for models with sibling edges.

A sibling edge ``(u, v, delta)`` of template ``T`` joins copy ``j`` of ``u``
to copy ``j + delta mod P_T`` of ``v``. The jump graph of ``T`` weights every
edge among ``T``'s own vertices by its shift, so walk weights mod ``P_T`` say
which copies reach which.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from .core_model import (
    Edge,
    ModelError,
    ParametricGraphTemplate,
    SiblingEdge,
    Template,
    is_acyclic,
    is_template_acyclic,
    tid_key,
)

__all__ = [
    "JumpGraph",
    "ShrunkJumpGraph",
    "build_jump_graph",
    "shrink",
    "reachable_instances",
    "PartialModel",
    "upwards_partial_instantiation_sib",
    "bfs_template",
    "sssp_template",
    "congruence_feasible",
    "retemplate",
    "retemplate_shift",
    "connected_components",
]


@dataclass(frozen=True)
class JumpGraph:
    template: str
    modulus: int
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]  # (u, v, shift mod modulus)


@dataclass(frozen=True)
class ShrunkJumpGraph:
    modulus: int
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, str, int], ...]  # nonzero shifts
    zero: tuple[tuple[str, str], ...]  # zero-weight reachability between kept vertices


def _own_edges(pgt: ParametricGraphTemplate, tid: str):
    """Plain and sibling edges with both endpoints owned by ``tid`` as ``(u, v, delta)``."""
    own = pgt.vertex_template
    out = [(e.tail, e.head, 0) for e in pgt.edges if own[e.tail] == tid and own[e.head] == tid]
    out += [(e.tail, e.head, e.delta) for e in pgt.sibling_edges if own[e.tail] == tid]
    return out


def build_jump_graph(pgt: ParametricGraphTemplate, tid: str) -> JumpGraph:
    if tid not in pgt.params:
        raise ModelError(f"unknown template {tid!r}")
    p = pgt.params[tid]
    edges = []
    for u, v, d in _own_edges(pgt, tid):
        edges.append((u, v, d % p))
        if not pgt.directed:
            edges.append((v, u, -d % p))
    edges += [(u, v, 0) for u, v in _detours(pgt, tid)]
    return JumpGraph(tid, p, tuple(pgt.members[tid]), tuple(edges))


def _detours(pgt: ParametricGraphTemplate, tid: str) -> list[tuple[str, str]]:
    """Pairs of ``tid``'s own vertices joined by a walk through descendant templates only.

    Such a walk stays inside one copy of ``tid``, so it adds a zero shift.
    """
    own = set(pgt.members[tid])
    below = pgt.template_set(tid) - own
    if not below:
        return []
    adj = pgt.adjacency()
    for e in pgt.sibling_edges:
        if e.tail in below:
            adj[e.tail].append(e.head)
            if not pgt.directed:
                adj[e.head].append(e.tail)
    out = []
    for u in pgt.members[tid]:
        entry = [c for c in adj[u] if c in below]
        seen = set(entry)
        stack = list(entry)
        hits = set()
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in below and y not in seen:
                    seen.add(y)
                    stack.append(y)
                elif y in own:
                    hits.add(y)
        out += [(u, w) for w in pgt.members[tid] if w in hits]
    return out


def shrink(jg: JumpGraph, query) -> ShrunkJumpGraph:
    """Keep endpoints of nonzero edges plus the query vertices; close zero paths."""
    queries = [query] if isinstance(query, str) else list(query)
    zero_adj = defaultdict(list)
    keep = dict.fromkeys(queries)
    nonzero = []
    for u, v, w in jg.edges:
        if w:
            nonzero.append((u, v, w))
            keep.setdefault(u)
            keep.setdefault(v)
        else:
            zero_adj[u].append(v)
    zero = []
    for a in keep:
        for b in _closure(zero_adj, a):
            if b != a and b in keep:
                zero.append((a, b))
    return ShrunkJumpGraph(jg.modulus, tuple(keep), tuple(nonzero), tuple(zero))


def _closure(adj, start) -> list:
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return list(seen)


def _topological(vertices, arcs):
    indeg = {v: 0 for v in vertices}
    out = defaultdict(list)
    for u, v, w in arcs:
        out[u].append((v, w))
        indeg[v] += 1
    queue = deque(v for v in vertices if indeg[v] == 0)
    order = []
    while queue:
        x = queue.popleft()
        order.append(x)
        for y, _ in out[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                queue.append(y)
    return order if len(order) == len(indeg) else None


def _residues(pgt: ParametricGraphTemplate, tid: str, sources, allow_cycles: bool) -> dict[str, frozenset]:
    """Residues of copies of ``tid``'s vertices reachable from copy 0 of ``sources``."""
    jg = build_jump_graph(pgt, tid)
    p = jg.modulus
    sj = shrink(jg, sources)
    arcs = list(sj.edges) + [(a, b, 0) for a, b in sj.zero]
    reach: dict[str, set] = defaultdict(set)
    for s in sources:
        reach[s].add(0)
    order = _topological(sj.vertices, arcs)
    if order is not None:
        incoming = defaultdict(list)
        for u, v, w in arcs:
            incoming[v].append((u, w))
        for x in order:
            for u, w in incoming[x]:
                reach[x].update((j + w) % p for j in reach[u])
    elif not allow_cycles:
        raise ModelError(
            f"jump graph of template {tid} has a cycle; use connected_components for undirected reachability"
        )
    else:
        out = defaultdict(list)
        for u, v, w in arcs:
            out[u].append((v, w))
        work = deque(sources)
        while work:
            x = work.popleft()
            for y, w in out[x]:
                fresh = {(j + w) % p for j in reach[x]} - reach[y]
                if fresh:
                    reach[y] |= fresh
                    work.append(y)
    zero_adj = defaultdict(list)
    for u, v, w in jg.edges:
        if not w:
            zero_adj[u].append(v)
    result: dict[str, set] = defaultdict(set)
    for a in sj.vertices:
        if reach[a]:
            for b in _closure(zero_adj, a):
                result[b] |= reach[a]
    return {v: frozenset(r) for v, r in result.items() if r}


def reachable_instances(pgt: ParametricGraphTemplate, tid: str, v: str, allow_cycles: bool = False) -> dict[str, frozenset]:
    """Copies of ``tid``'s vertices reachable from copy 0 of ``v`` inside one copy
    of the parent, as residues mod ``P_tid``.

    Walks may dip into descendant templates and come back, since that never
    changes the copy of ``tid``. A cyclic jump graph raises unless
    ``allow_cycles`` is set, in which case residues are found by fixpoint.
    """
    if pgt.template_of(v) != tid:
        raise ModelError(f"vertex {v} does not belong to template {tid}")
    if not pgt.directed and not allow_cycles:
        allow_cycles = True
    return _residues(pgt, tid, [v], allow_cycles)


@dataclass(frozen=True, eq=False)
class PartialModel:
    """A rewritten model plus the map from its copies back to the input's.

    ``origin[v] = (w, prefix)`` says vertex ``v`` stands for input vertex
    ``w`` under the address ``prefix``; ``template_origin`` names the input
    template each output template copies. Templates split by
    materialization may also carry an index ``offset``, fixed address pairs
    to insert before their own entry (``lead``), and vertices moved out of a
    template keep that template's pairs in ``tail``.
    """

    model: ParametricGraphTemplate
    source: str
    origin: dict = field(default_factory=dict)
    template_origin: dict = field(default_factory=dict)
    distance: dict = field(default_factory=dict)
    offset: dict = field(default_factory=dict)
    lead: dict = field(default_factory=dict)
    tail: dict = field(default_factory=dict)

    def map_instance(self, v: str, addr: tuple) -> tuple:
        w, prefix = self.origin[v]
        out = list(prefix)
        for t, i in addr:
            out += self.lead.get(t, ())
            out.append((self.template_origin[t], i + self.offset.get(t, 0)))
        return w, tuple(out) + self.tail.get(v, ())


def _label(v: str, addr) -> str:
    return f"{v}@" + ".".join(str(i) for _, i in addr)


def upwards_partial_instantiation_sib(pgt: ParametricGraphTemplate, v: str) -> PartialModel:
    """Model of the part of the instantiation reachable from copy 0 of ``v``.

    Copies of ``v``'s template and its ancestors that ``v`` reaches become
    individual root vertices named ``name@i1.i2``. Templates hanging below
    them keep their parameters and are copied once per materialized copy of
    their parent. The instantiation of the result is isomorphic (through
    :meth:`PartialModel.map_instance`) to the subgraph of the input's
    instantiation induced by the vertices reachable from ``v``.
    """
    if not pgt.directed:
        raise ModelError("upwards partial instantiation with sibling edges needs a directed model")
    if not is_template_acyclic(pgt):
        raise ModelError("upwards partial instantiation with sibling edges needs a template-acyclic model")
    tree = pgt.tree
    own = pgt.vertex_template
    params = pgt.params
    chain = list(pgt.chain(v))
    chain_set = set(chain)
    root = tree.root
    up = defaultdict(list)
    for e in pgt.edges:
        if tree.parent.get(own[e.tail]) == own[e.head]:
            up[e.tail].append(e.head)

    # reachable copies of v's template and its ancestors, innermost level first
    concrete: dict[tuple, str] = {}
    contexts: list[tuple] = []
    sources = [v]
    for level in range(len(chain), -1, -1):
        tid = chain[level - 1] if level else root
        outer = tuple((t, 0) for t in chain[: max(level - 1, 0)])
        residues = _residues(pgt, tid, sources, allow_cycles=True) if sources else {}
        copies = set()
        for u, rs in residues.items():
            for r in rs:
                addr = outer + ((tid, r),) if level else ()
                concrete[(u, addr)] = _label(u, addr) if addr else u
                copies.add(addr)
        contexts += [(tid, a) for a in sorted(copies, key=lambda a: [i for _, i in a])]
        sources = sorted({y for u in residues for y in up[u]}) if level else []

    templates = [Template(root, None, 1)]
    template_origin = {root: root}
    placement = {name: root for name in concrete.values()}
    origin = {name: key for key, name in concrete.items()}
    side_home: dict[str, tuple] = {}  # side-copy vertex -> context address

    def side_name(u, ctx):
        return _label(u, ctx) if ctx else u

    for tid, ctx in contexts:
        for child in tree.children[tid]:
            if child in chain_set:
                continue
            rename = {}
            for t in tree.subtree(child):
                rename[t] = f"{t}@" + ".".join(str(i) for _, i in ctx) if ctx else t
                parent = root if t == child else rename[tree.parent[t]]
                templates.append(Template(rename[t], parent, params[t]))
                template_origin[rename[t]] = t
            for u in pgt.vertices:
                if own[u] in rename:
                    name = side_name(u, ctx)
                    placement[name] = rename[own[u]]
                    origin[name] = (u, ctx)
                    side_home[name] = ctx

    by_origin = defaultdict(list)
    for name, (u, _) in origin.items():
        by_origin[u].append(name)

    def targets(name, b, delta=None):
        """Output vertices that copies of ``name`` reach through an edge to ``b``."""
        a, addr = origin[name]
        ta, tb = own[a], own[b]
        if name in side_home:
            ctx = side_home[name]
            if tb in chain_set or tb == root:
                return [concrete.get((b, ctx))]
            return [side_name(b, ctx)]
        if delta is not None:
            if ta == root:
                return [concrete.get((b, addr))]
            return [concrete.get((b, addr[:-1] + ((ta, (addr[-1][1] + delta) % params[ta]),)))]
        if tb == ta:
            return [concrete.get((b, addr))]
        if tree.parent.get(ta) == tb:
            return [concrete.get((b, addr[:-1]))]
        if tb in chain_set:
            return [concrete.get((b, addr + ((tb, j),))) for j in range(params[tb])]
        return [side_name(b, addr)]

    edges, sedges = [], []
    for e in pgt.edges:
        for name in by_origin[e.tail]:
            for y in targets(name, e.head):
                if y in placement:
                    edges.append(Edge(name, y, e.weight))
    for e in pgt.sibling_edges:
        for name in by_origin[e.tail]:
            (y,) = targets(name, e.head, e.delta)
            if y not in placement:
                continue
            if name in side_home:
                sedges.append(SiblingEdge(name, y, e.delta, e.weight))
            else:
                edges.append(Edge(name, y, e.weight))
    model = ParametricGraphTemplate(True, tuple(templates), placement, tuple(edges), tuple(sedges))
    start = concrete[(v, tuple((t, 0) for t in chain))]
    model = _restrict_reachable(model, start)
    kept = set(model.params)
    return PartialModel(
        model,
        start,
        {k: o for k, o in origin.items() if k in model.vertex_template},
        {k: o for k, o in template_origin.items() if k in kept},
    )


def _restrict_reachable(model: ParametricGraphTemplate, start: str) -> ParametricGraphTemplate:
    """Drop template-graph vertices (and emptied templates) not reachable from ``start``."""
    adj = defaultdict(list)
    for e in model.edges:
        adj[e.tail].append(e.head)
    for e in model.sibling_edges:
        adj[e.tail].append(e.head)
    keep = set(_closure(adj, start))
    placement = {u: t for u, t in model.vertex_template.items() if u in keep}
    tree = model.tree
    used = set()
    for t in placement.values():
        while t not in used:
            used.add(t)
            t = tree.parent[t]
    templates = tuple(t for t in model.templates if t.id in used)
    edges = tuple(e for e in model.edges if e.tail in keep and e.head in keep)
    sedges = tuple(e for e in model.sibling_edges if e.tail in keep and e.head in keep)
    return ParametricGraphTemplate(model.directed, templates, placement, edges, sedges)


def _materialize(part: PartialModel, tid: str) -> PartialModel:
    """Move copy 0 of ``tid`` (every copy if ``tid`` has sibling edges) into its parent.

    Each moved copy brings duplicates of the templates below ``tid``. The
    instantiation is unchanged up to the renaming recorded in the result.
    """
    model = part.model
    tree = model.tree
    own = model.vertex_template
    p = model.params[tid]
    par = tree.parent[tid]
    inside = model.template_set(tid)
    below = [t for t in tree.subtree(tid) if t != tid]
    shifting = any(own[e.tail] == tid for e in model.sibling_edges)
    count = p if shifting else 1
    base = part.offset.get(tid, 0)
    taken = set(own) | set(model.params)
    templates = [t for t in model.templates if t.id != tid and t.id not in below]
    placement = {u: t for u, t in own.items() if u not in inside}
    origin = {u: o for u, o in part.origin.items() if u not in inside}
    template_origin = {t: o for t, o in part.template_origin.items() if t != tid and t not in below}
    offset = {t: o for t, o in part.offset.items() if t != tid and t not in below}
    lead = {t: o for t, o in part.lead.items() if t != tid and t not in below}
    tail = {u: o for u, o in part.tail.items() if u not in inside}
    if count < p:
        templates.append(Template(tid, par, p - count))
        template_origin[tid] = part.template_origin[tid]
        offset[tid] = base + count
        if tid in part.lead:
            lead[tid] = part.lead[tid]
        for t in below:
            templates.append(next(x for x in model.templates if x.id == t))
            template_origin[t] = part.template_origin[t]
            if t in part.offset:
                offset[t] = part.offset[t]
            if t in part.lead:
                lead[t] = part.lead[t]
        for u in inside:
            placement[u] = own[u]
            origin[u] = part.origin[u]
            if u in part.tail:
                tail[u] = part.tail[u]
    pin = lambda j: part.lead.get(tid, ()) + ((part.template_origin[tid], base + j),)
    names = []
    for j in range(count):
        vname, tname = {}, {}
        for u in sorted(inside, key=tid_key):
            vname[u] = _fresh(f"{u}#{j}", taken)
        for t in below:
            tname[t] = _fresh(f"{t}#{j}", taken)
            parent = par if tree.parent[t] == tid else tname[tree.parent[t]]
            templates.append(Template(tname[t], parent, model.params[t]))
            template_origin[tname[t]] = part.template_origin[t]
            if t in part.offset:
                offset[tname[t]] = part.offset[t]
            lead[tname[t]] = (pin(j) if tree.parent[t] == tid else ()) + part.lead.get(t, ())
        for u in inside:
            placement[vname[u]] = par if own[u] == tid else tname[own[u]]
            origin[vname[u]] = part.origin[u]
            extra = pin(j) if own[u] == tid else ()
            if extra + part.tail.get(u, ()):
                tail[vname[u]] = extra + part.tail.get(u, ())
        names.append(vname)
    edges = [e for e in model.edges if count < p or (e.tail not in inside and e.head not in inside)]
    sedges = [e for e in model.sibling_edges if count < p or e.tail not in inside]
    for j, vname in enumerate(names):
        for e in model.edges:
            if e.tail in inside or e.head in inside:
                edges.append(Edge(vname.get(e.tail, e.tail), vname.get(e.head, e.head), e.weight))
        for e in model.sibling_edges:
            if own[e.tail] == tid:
                edges.append(Edge(vname[e.tail], names[(j + e.delta) % p][e.head], e.weight))
            elif e.tail in inside:
                sedges.append(SiblingEdge(vname[e.tail], vname[e.head], e.delta, e.weight))
    out = ParametricGraphTemplate(model.directed, tuple(templates), placement, tuple(edges), tuple(sedges))
    return PartialModel(out, part.source, origin, template_origin, {}, offset, lead, tail)


def _fresh(name: str, taken: set) -> str:
    k = 0
    out = name
    while out in taken:
        k += 1
        out = f"{name}~{k}"
    taken.add(out)
    return out


def _search_tree(pgt: ParametricGraphTemplate, s: str, weighted: bool) -> PartialModel:
    if not pgt.directed:
        raise ModelError("BFS/SSSP templates need a directed model")
    if not (is_acyclic(pgt) and is_template_acyclic(pgt)):
        raise ModelError("BFS/SSSP templates need a strongly template-acyclic model")
    part = upwards_partial_instantiation_sib(pgt, s)
    while True:
        model = part.model
        own, tree, params = model.vertex_template, model.tree, model.params
        arcs = defaultdict(list)
        for i, e in enumerate(model.edges):
            arcs[e.tail].append((e.head, e.weight if weighted else 1, ("e", i)))
        for i, e in enumerate(model.sibling_edges):
            arcs[e.tail].append((e.head, e.weight if weighted else 1, ("s", i)))
        order = {u: i for i, u in enumerate(sorted(own, key=tid_key))}
        dist = {part.source: Fraction(0)}
        heap = [(Fraction(0), order[part.source], part.source)]
        done = set()
        while heap:
            d, _, x = heapq.heappop(heap)
            if x in done:
                continue
            done.add(x)
            for y, w, _ in arcs[x]:
                if y not in dist or d + w < dist[y]:
                    dist[y] = d + w
                    heapq.heappush(heap, (d + w, order[y], y))

        # an edge climbing out of a replicated template would give its head
        # one parent per copy
        def climbs(x, y):
            tx = own[x]
            return tx != own[y] and tree.parent.get(tx) == own[y] and params[tx] > 1

        via, blocked = {}, None
        for x in sorted(dist, key=order.__getitem__):
            for y, w, tag in arcs[x]:
                if dist[x] + w == dist[y] and y != part.source:
                    key = (climbs(x, y), order[x], tag)
                    if y not in via or key < via[y][0]:
                        via[y] = (key, tag, x)
        for y, (key, _, x) in via.items():
            if key[0]:
                blocked = own[x]
                break
        if blocked is None:
            break
        part = _materialize(part, blocked)
    edges = tuple(model.edges[i] for _, (kind, i), _ in via.values() if kind == "e")
    sedges = tuple(model.sibling_edges[i] for _, (kind, i), _ in via.values() if kind == "s")
    tree_model = model.replace(edges=edges, sibling_edges=sedges)
    return PartialModel(tree_model, part.source, part.origin, part.template_origin, dist, part.offset, part.lead, part.tail)


def bfs_template(pgt: ParametricGraphTemplate, s: str) -> PartialModel:
    """Model whose instantiation is a BFS arborescence from copy 0 of ``s``.

    ``distance`` gives the hop count of every template-graph vertex of the
    result; all copies of a vertex share it.
    """
    return _search_tree(pgt, s, weighted=False)


def sssp_template(pgt: ParametricGraphTemplate, s: str) -> PartialModel:
    """Like :func:`bfs_template` but with a shortest-path arborescence under edge weights."""
    return _search_tree(pgt, s, weighted=True)


def congruence_feasible(a, p: int, b: int) -> bool:
    """Does ``sum a_i x_i = b (mod p)`` have an integer solution?"""
    if p < 1:
        raise ModelError("modulus must be positive")
    g = reduce(math.gcd, [abs(x) for x in a], p)
    return b % g == 0


def retemplate_shift(pgt: ParametricGraphTemplate, tid: str) -> dict[str, int]:
    """Path weight from each vertex to the root of a BFS spanning tree of the jump graph.

    The tree is grown from the vertex with the smallest name, ignoring edge
    directions; a vertex's copy ``i`` becomes copy ``i + shift`` after
    retemplating.
    """
    shift, _ = _spanning(pgt, tid)
    return shift


def _spanning(pgt: ParametricGraphTemplate, tid: str):
    verts = sorted(pgt.members[tid], key=tid_key)
    if not verts:
        raise ModelError(f"template {tid} owns no vertices")
    p = pgt.params[tid]
    incident = defaultdict(list)
    edges = _own_edges(pgt, tid)
    for i, (u, v, d) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)
    alpha = {verts[0]: 0}
    tree_edges = set()
    queue = deque([verts[0]])
    while queue:
        x = queue.popleft()
        for i in incident[x]:
            u, v, d = edges[i]
            y = v if u == x else u
            if y in alpha:
                continue
            # alpha(y) = weight of the step y -> x plus alpha(x)
            alpha[y] = (alpha[x] + (d if y == u else -d)) % p
            tree_edges.add(i)
            queue.append(y)
    if len(alpha) != len(verts):
        raise ModelError(f"template graph of {tid} is disconnected")
    return alpha, (edges, tree_edges)


def retemplate(pgt: ParametricGraphTemplate, tid: str) -> ParametricGraphTemplate:
    """Move every shift off a spanning tree of ``tid``'s jump graph.

    Tree edges become plain edges; every other edge among ``tid``'s vertices
    becomes a sibling edge with shift ``delta + alpha(v) - alpha(u)``. Copy
    ``i`` of ``v`` in the input corresponds to copy ``i + alpha(v)`` in the
    output.
    """
    p = pgt.params[tid] if tid in pgt.params else None
    if p is None:
        raise ModelError(f"unknown template {tid!r}")
    if pgt.tree.children[tid] and p > 1:
        raise ModelError(f"template {tid} has child templates; retemplating would not preserve them")
    alpha, (edges, tree_edges) = _spanning(pgt, tid)
    own = pgt.vertex_template
    keep_edges = [e for e in pgt.edges if not (own[e.tail] == tid and own[e.head] == tid)]
    keep_sib = [e for e in pgt.sibling_edges if own[e.tail] != tid]
    weights = [e.weight for e in pgt.edges if own[e.tail] == tid and own[e.head] == tid]
    weights += [e.weight for e in pgt.sibling_edges if own[e.tail] == tid]
    new_edges, new_sib = [], []
    for i, (u, v, d) in enumerate(edges):
        if i in tree_edges:
            new_edges.append(Edge(u, v, weights[i]))
        else:
            new_sib.append(SiblingEdge(u, v, (d + alpha[v] - alpha[u]) % p, weights[i]))
    return pgt.replace(edges=tuple(keep_edges + new_edges), sibling_edges=tuple(keep_sib + new_sib))


def connected_components(pgt: ParametricGraphTemplate) -> int:
    """Number of connected components of the instantiation (directions ignored).

    Templates are processed bottom-up. A connected piece of a template's own
    graph that touches its parent collapses into one parent vertex. A piece
    that does not is counted: after retemplating it is a single vertex with
    loops, so it splits into ``gcd(P, loop shifts)`` components in every copy
    of the parent.
    """
    tree = pgt.tree
    params = pgt.params
    prod = pgt.ancestor_products
    own = dict(pgt.vertex_template)
    # (u, v, delta) with delta None for plain edges
    edges = [(e.tail, e.head, 0) for e in pgt.edges] + [(e.tail, e.head, e.delta) for e in pgt.sibling_edges]
    members = defaultdict(set)
    for u, t in own.items():
        members[t].add(u)
    total = 0
    fresh = 0
    for tid in tree.postorder():
        verts = members[tid]
        if not verts:
            continue
        p = params[tid]
        inner = [(u, v, d) for u, v, d in edges if u in verts and v in verts]
        adj = defaultdict(list)
        for u, v, _ in inner:
            adj[u].append(v)
            adj[v].append(u)
        seen = set()
        collapse: dict[str, str] = {}
        for start in sorted(verts, key=tid_key):
            if start in seen:
                continue
            piece = set(_closure(adj, start))
            seen |= piece
            outside = {v if u in piece else u for u, v, _ in edges if (u in piece) != (v in piece)}
            if outside and tid != tree.root:
                fresh += 1
                hub = f"~piece{fresh}"
                parent = tree.parent[tid]
                own[hub] = parent
                members[parent].add(hub)
                for u in piece:
                    collapse[u] = hub
            else:
                shifts = _cycle_shifts(piece, [(u, v, d) for u, v, d in inner if u in piece], p)
                total += math.gcd(p, *shifts) * (prod[tid] // p)
        edges = [
            (collapse.get(u, u), collapse.get(v, v), d)
            for u, v, d in edges
            if not (u in verts and v in verts)
        ]
        members[tid] = set()
    return total


def _cycle_shifts(piece, edges, p) -> list[int]:
    """Weights of the fundamental cycles of a BFS spanning tree of ``piece``."""
    start = min(piece, key=tid_key)
    incident = defaultdict(list)
    for i, (u, v, d) in enumerate(edges):
        incident[u].append(i)
        incident[v].append(i)
    alpha = {start: 0}
    tree_edges = set()
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for i in incident[x]:
            u, v, d = edges[i]
            y = v if u == x else u
            if y in alpha:
                continue
            alpha[y] = (alpha[x] + (d if y == u else -d)) % p
            tree_edges.add(i)
            queue.append(y)
    return [(d + alpha[v] - alpha[u]) % p for i, (u, v, d) in enumerate(edges) if i not in tree_edges]
