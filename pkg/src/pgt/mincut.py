"""Global minimum cut of an undirected parametric graph template.

Two families of candidate cuts are evaluated without instantiating. In the
first, one side lives inside a single copy of some template whose children
were contracted into their attachment vertices. In the second, one side lives
inside a single copy of a template and every vertex has all its copies there
on the same side, which edge reweighting measures exactly. The answer is the
cheaper of the two.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .core_model import (
    ModelError,
    ParametricGraphTemplate,
    Template,
    WeightedGraph,
    boundary_vertices,
)
from .transforms import edge_reweight, fresh_name, induced_parametric_subgraph

__all__ = [
    "CutResult",
    "solve_global_mincut",
    "mincut_no_cross",
    "mincut_cross",
    "min_cut",
    "witness_instances",
    "normalize_for_cuts",
]


@dataclass(frozen=True)
class CutResult:
    """A cut value plus a constructive description of one side.

    The side consists of every copy, inside copy 0 of ``template`` (index 0 at
    every level down to it), of the vertices in ``side``.
    """

    value: Fraction
    case_tag: str
    template: str
    side: frozenset

    def describe(self) -> str:
        names = " ".join(sorted(self.side))
        return f"template {self.template} side {{{names}}}"


def _components(vertices: Iterable, edges) -> list[list]:
    adj = defaultdict(list)
    for u, v, *_ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen, comps = set(), []
    for v in vertices:
        if v in seen:
            continue
        comp, queue = [], deque([v])
        seen.add(v)
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        comps.append(comp)
    return comps


def solve_global_mincut(graph: WeightedGraph) -> tuple[Fraction, frozenset]:
    """Stoer-Wagner minimum cut. Returns the value and one side.

    A disconnected graph yields value 0 with one component as the side.
    """
    verts = list(graph.vertices)
    if len(verts) < 2:
        raise ModelError("a cut needs at least two vertices")
    comps = _components(verts, graph.edges)
    if len(comps) > 1:
        return Fraction(0), frozenset(comps[0])
    weight: dict = {v: defaultdict(Fraction) for v in verts}
    for u, v, w in graph.edges:
        if u != v:
            weight[u][v] += w
            weight[v][u] += w
    members = {v: [v] for v in verts}
    active = list(verts)
    best, best_side = None, None
    while len(active) > 1:
        first = active[0]
        conn = {v: weight[first].get(v, Fraction(0)) for v in active[1:]}
        prev, last, last_conn = first, None, None
        while conn:
            nxt = max(conn, key=conn.__getitem__)
            last_conn = conn.pop(nxt)
            for y, w in weight[nxt].items():
                if y in conn:
                    conn[y] += w
            prev, last = (last if last is not None else first), nxt
        if best is None or last_conn < best:
            best, best_side = last_conn, frozenset(members[last])
        # merge ``last`` into ``prev``
        members[prev].extend(members.pop(last))
        for y, w in weight.pop(last).items():
            if y == prev:
                continue
            weight[prev][y] += w
            weight[y][prev] += w
            del weight[y][last]
        weight[prev].pop(last, None)
        active.remove(last)
    return best, best_side


def _merge_unit_templates(pgt: ParametricGraphTemplate) -> ParametricGraphTemplate:
    """Fold non-root parameter-1 templates into their parents."""
    tree = pgt.tree
    unit = {t.id for t in pgt.templates if t.parent is not None and t.param == 1}
    if not unit:
        return pgt

    def keep(tid):
        while tid in unit:
            tid = tree.parent[tid]
        return tid

    templates = tuple(
        Template(t.id, None if t.parent is None else keep(t.parent), t.param) for t in pgt.templates if t.id not in unit
    )
    placement = {v: keep(t) for v, t in pgt.vertex_template.items()}
    return pgt.replace(templates=templates, vertex_template=placement)


def normalize_for_cuts(pgt: ParametricGraphTemplate) -> tuple[ParametricGraphTemplate, dict[str, str]]:
    """Drop parameter-1 templates and split the rest into connected pieces.

    Returns the new model and a map from piece ids to original template ids.
    The instantiation is unchanged.
    """
    if pgt.directed:
        raise ModelError("minimum cuts need an undirected model")
    if pgt.sibling_edges:
        raise ModelError("minimum cuts are not supported on models with sibling edges")
    model = _merge_unit_templates(pgt)
    tree = model.tree
    adj = model.adjacency()
    taken = set(model.params)
    piece_at: dict[str, dict[str, str]] = {}
    templates = []
    origin = {}
    for tid in tree.preorder():
        tset = model.template_set(tid)
        if tid == tree.root:
            piece_at[tid] = {v: tid for v in tset}
            templates.append(Template(tid, None, 1))
            origin[tid] = tid
            continue
        pieces = []
        seen = set()
        for v in model.vertices:
            if v not in tset or v in seen:
                continue
            comp, queue = [], deque([v])
            seen.add(v)
            while queue:
                x = queue.popleft()
                comp.append(x)
                for y in adj[x]:
                    if y in tset and y not in seen:
                        seen.add(y)
                        queue.append(y)
            pieces.append(comp)
        piece_at[tid] = {}
        for i, comp in enumerate(pieces):
            pid = tid if len(pieces) == 1 else fresh_name(f"{tid}#{i + 1}", taken)
            taken.add(pid)
            origin[pid] = tid
            parent_piece = piece_at[tree.parent[tid]][comp[0]]
            templates.append(Template(pid, parent_piece, model.params[tid]))
            for v in comp:
                piece_at[tid][v] = pid
    placement = {v: piece_at[t][v] for v, t in model.vertex_template.items()}
    return model.replace(templates=tuple(templates), vertex_template=placement), origin


def _disconnection(model: ParametricGraphTemplate, origin) -> CutResult | None:
    comps = _components(model.vertices, [(e.tail, e.head) for e in model.edges])
    if len(comps) > 1:
        return CutResult(Fraction(0), "disconnected", origin[model.root], frozenset(comps[0]))
    for t in model.templates:
        if t.parent is not None and model.template_set(t.id) and not boundary_vertices(model, t.id):
            return CutResult(Fraction(0), "disconnected", origin[t.id], frozenset(model.template_set(t.id)))
    return None


def _prepare(pgt: ParametricGraphTemplate):
    if pgt.total_instances() < 2:
        raise ModelError("a cut needs at least two instantiated vertices")
    model, origin = normalize_for_cuts(pgt)
    return model, origin, _disconnection(model, origin)


def mincut_no_cross(pgt: ParametricGraphTemplate) -> CutResult:
    """Best cut with one side inside a single copy of a contracted template."""
    model, origin, broken = _prepare(pgt)
    if broken:
        return broken
    tree = model.tree
    rep = {v: v for v in model.vertices}
    group = {v: {v} for v in model.vertices}

    def find(x):
        while rep[x] != x:
            rep[x] = rep[rep[x]]
            x = rep[x]
        return x

    def union(keep, other):
        keep, other = find(keep), find(other)
        if keep != other:
            rep[other] = keep
            group[keep] |= group.pop(other)

    best: CutResult | None = None
    for tid in tree.postorder():
        work = {find(v) for v in model.members[tid]}
        bnd = sorted(boundary_vertices(model, tid)) if tid != tree.root else []
        hub = None
        if bnd:
            hub = fresh_name("^hub", model.vertex_template)
        edges = []
        for e in model.edges:
            a, b = find(e.tail), find(e.head)
            if a not in work and b not in work:
                continue
            a = a if a in work else hub
            b = b if b in work else hub
            if a != b:
                edges.append((a, b, e.weight))
        verts = tuple(sorted(work)) + ((hub,) if hub else ())
        if len(verts) >= 2:
            value, side = solve_global_mincut(WeightedGraph(False, verts, tuple(edges)))
            if hub in side:
                side = frozenset(verts) - side
            originals = frozenset().union(*(group[r] for r in side))
            if best is None or value < best.value:
                best = CutResult(value, "no_cross", origin[tid], originals)
        if bnd:
            anchor = find(bnd[0])
            for x in list(work) + bnd:
                union(anchor, x)
    if best is None:
        raise ModelError("no cut found")
    return best


def mincut_cross(pgt: ParametricGraphTemplate) -> CutResult:
    """Best reweighted cut of each template with its boundary merged."""
    model, origin, broken = _prepare(pgt)
    if broken:
        return broken
    best: CutResult | None = None
    for t in model.templates:
        sub = induced_parametric_subgraph(model, t.id, merge_boundary=True)
        graph = edge_reweight(sub)
        if len(graph.vertices) < 2:
            continue
        value, side = solve_global_mincut(graph)
        hubs = set(sub.vertices) - set(model.vertices)
        if side & hubs:
            side = frozenset(graph.vertices) - side
        if best is None or value < best.value:
            best = CutResult(value, "cross", origin[t.id], frozenset(side))
    if best is None:
        raise ModelError("no cut found")
    return best


def min_cut(pgt: ParametricGraphTemplate) -> CutResult:
    first = mincut_no_cross(pgt)
    if first.case_tag == "disconnected":
        return first
    second = mincut_cross(pgt)
    return second if second.value < first.value else first


def witness_instances(pgt: ParametricGraphTemplate, result: CutResult, instantiation) -> set:
    """Instantiated vertices on the described side of ``result``."""
    chain = set(pgt.tree.path_from_root(result.template))
    out = set()
    for v in instantiation.vertices:
        origin, addr = v
        if origin in result.side and all(i == 0 for t, i in addr if t in chain):
            out.add(v)
    return out
