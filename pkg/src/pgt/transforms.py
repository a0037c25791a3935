"""Model-to-model rewrites shared by the flow, cut and matching algorithms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core_model import (
    INF,
    Edge,
    ModelError,
    ParametricGraphTemplate,
    Template,
    WeightedGraph,
    boundary_vertices,
)

__all__ = [
    "ReweightedGraph",
    "edge_reweight",
    "instance_merge",
    "Lifted",
    "lift_instance",
    "upwards_partial_instantiation",
    "induced_parametric_subgraph",
    "fresh_name",
    "normalize_address",
]


@dataclass(frozen=True, eq=False)
class ReweightedGraph(WeightedGraph):
    """Template graph with every edge scaled by the parameters around it."""


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"


def _reject_siblings(pgt: ParametricGraphTemplate, what: str) -> None:
    if pgt.sibling_edges:
        raise ModelError(f"{what} is not defined for models with sibling edges")


def edge_scale(pgt: ParametricGraphTemplate, u: str, v: str) -> int:
    """Product of the parameters of all templates containing ``u`` or ``v``."""
    tree, prod = pgt.tree, pgt.ancestor_products
    tu, tv = pgt.template_of(u), pgt.template_of(v)
    if tu == tv:
        return prod[tu]
    common = tree.lca(tu, tv)
    return prod[tu] * prod[tv] // prod[common]


def edge_reweight(pgt: ParametricGraphTemplate) -> ReweightedGraph:
    _reject_siblings(pgt, "edge reweighting")
    edges = tuple((e.tail, e.head, e.weight * edge_scale(pgt, e.tail, e.head)) for e in pgt.edges)
    return ReweightedGraph(pgt.directed, tuple(pgt.vertex_template), edges)


def instance_merge(pgt: ParametricGraphTemplate, s: str) -> ParametricGraphTemplate:
    """Pull ``s`` up to the root, routing its cross-template edges through dummies.

    Dummy edges pointing at ``s`` carry infinite weight, so contracting them
    recovers the instantiation with all copies of ``s`` identified.
    """
    tree = pgt.tree
    placement = dict(pgt.vertex_template)
    if s not in placement:
        raise ModelError(f"unknown vertex {s!r}")
    edges = list(pgt.edges)
    while placement[s] != tree.root:
        here = placement[s]
        rewritten = []
        for e in edges:
            if e.tail == e.head or s not in (e.tail, e.head):
                rewritten.append(e)
                continue
            other = e.head if e.tail == s else e.tail
            if placement[other] == here:
                rewritten.append(e)
                continue
            dummy = fresh_name(f"{s}~", placement)
            placement[dummy] = here
            if e.tail == s:
                rewritten += [Edge(s, dummy, INF), Edge(dummy, other, e.weight)]
            else:
                rewritten += [Edge(other, dummy, e.weight), Edge(dummy, s, INF)]
        edges = rewritten
        placement[s] = tree.parent[here]
    return pgt.replace(vertex_template=placement, edges=tuple(edges))


InstanceMap = Callable[[str, tuple], tuple]


@dataclass(frozen=True, eq=False)
class Lifted:
    """Result of lifting one instance of a vertex into the root template.

    ``map_instance`` carries an instantiated vertex of the input model to the
    corresponding vertex of ``model``; it is the isomorphism between the two
    instantiations.
    """

    model: ParametricGraphTemplate
    vertex: str
    steps: tuple[InstanceMap, ...]

    def map_instance(self, v: str, addr: tuple) -> tuple[str, tuple]:
        for step in self.steps:
            v, addr = step(v, addr)
        return v, addr


def normalize_address(pgt: ParametricGraphTemplate, v: str, address) -> dict[str, int]:
    """Accept ``None`` (all zeros), a tuple of ints, or ``(template, index)`` pairs."""
    chain = pgt.chain(v)
    if address is None:
        return {t: 0 for t in chain}
    address = tuple(address)
    if address and isinstance(address[0], tuple):
        ids = [t for t, _ in address]
        idx = [i for _, i in address]
        if ids != list(chain):
            raise ModelError(f"address for {v} must name templates {list(chain)}")
    else:
        idx = list(address)
    if len(idx) != len(chain):
        raise ModelError(f"address for {v} needs {len(chain)} indices, got {len(idx)}")
    for t, i in zip(chain, idx):
        if not 0 <= int(i) < pgt.params[t]:
            raise ModelError(f"index {i} out of range for template {t} (param {pgt.params[t]})")
    return {t: int(i) for t, i in zip(chain, idx)}


def _copy_suffix(pgt: ParametricGraphTemplate, vertices: Iterable[str], templates: Iterable[str]) -> str:
    vertices, templates = list(vertices), list(templates)
    tids = set(pgt.params)
    k = 1
    while any(f"{v}'{k}" in pgt.vertex_template for v in vertices) or any(f"{t}'{k}" in tids for t in templates):
        k += 1
    return f"'{k}"


def _split(pgt: ParametricGraphTemplate, tid: str, chosen: int):
    """Separate instance ``chosen`` of ``tid`` from the remaining ones."""
    tree = pgt.tree
    sub = tree.subtree(tid)
    sub_set = set(sub)
    inside = pgt.template_set(tid)
    suffix = _copy_suffix(pgt, inside, sub)
    param = pgt.params[tid]

    templates = []
    for t in pgt.templates:
        templates.append(Template(t.id, t.parent, 1) if t.id == tid else t)
    for t in pgt.templates:
        if t.id in sub_set:
            parent = t.parent + suffix if t.id != tid else t.parent
            templates.append(Template(t.id + suffix, parent, param - 1 if t.id == tid else t.param))
    placement = dict(pgt.vertex_template)
    for v in [v for v in pgt.vertex_template if v in inside]:
        placement[v + suffix] = pgt.vertex_template[v] + suffix

    def rn(x):
        return x + suffix if x in inside else x

    edges = list(pgt.edges)
    for e in pgt.edges:
        if e.tail in inside or e.head in inside:
            edges.append(Edge(rn(e.tail), rn(e.head), e.weight))

    def step(v, addr):
        if v not in inside:
            return v, addr
        pos = next(k for k, (t, _) in enumerate(addr) if t == tid)
        j = addr[pos][1]
        if j == chosen:
            return v, addr[:pos] + ((tid, 0),) + addr[pos + 1 :]
        j = j if j < chosen else j - 1
        tail = tuple((t + suffix, x) for t, x in addr[pos + 1 :])
        return v + suffix, addr[:pos] + ((tid + suffix, j),) + tail

    return ParametricGraphTemplate(pgt.directed, tuple(templates), placement, tuple(edges)), step


def _dissolve(pgt: ParametricGraphTemplate, doomed: Sequence[str]):
    """Delete parameter-1 templates, handing their vertices and children to the root."""
    root = pgt.root
    gone = set(doomed)
    templates = tuple(
        Template(t.id, root if t.parent in gone else t.parent, t.param) for t in pgt.templates if t.id not in gone
    )
    placement = {v: (root if t in gone else t) for v, t in pgt.vertex_template.items()}

    def step(v, addr):
        return v, tuple((t, x) for t, x in addr if t not in gone)

    return pgt.replace(templates=templates, vertex_template=placement), step


def lift_instance(pgt: ParametricGraphTemplate, s: str, address=None) -> Lifted:
    """Upwards partial instantiation that keeps the isomorphism explicit."""
    _reject_siblings(pgt, "upwards partial instantiation")
    chosen = normalize_address(pgt, s, address)
    model = pgt
    steps = []
    while True:
        chain = model.chain(s)
        busy = [t for t in chain if model.params[t] > 1]
        if not busy:
            break
        model, step = _split(model, busy[0], chosen[busy[0]])
        steps.append(step)
    if chain:
        model, step = _dissolve(model, chain)
        steps.append(step)
    return Lifted(model, s, tuple(steps))


def upwards_partial_instantiation(pgt: ParametricGraphTemplate, s: str, address=None) -> ParametricGraphTemplate:
    return lift_instance(pgt, s, address).model


def induced_parametric_subgraph(
    pgt: ParametricGraphTemplate, tid: str, merge_boundary: bool = False
) -> ParametricGraphTemplate:
    """The part of the model spanned by ``tid`` and its boundary vertices.

    ``tid`` becomes the root with parameter 1 and keeps its descendants.
    With ``merge_boundary`` the boundary collapses into one vertex named
    ``^`` followed by the joined boundary names.
    """
    tree = pgt.tree
    if tid not in tree.parent:
        raise ModelError(f"unknown template {tid!r}")
    sub = set(tree.subtree(tid))
    inside = pgt.template_set(tid)
    boundary = set() if tid == tree.root else boundary_vertices(pgt, tid)
    templates = tuple(Template(t.id, None if t.id == tid else t.parent, 1 if t.id == tid else t.param)
                      for t in pgt.templates if t.id in sub)
    placement = {v: t for v, t in pgt.vertex_template.items() if v in inside}
    rename = {}
    if merge_boundary and boundary:
        hub = fresh_name("^" + "-".join(sorted(boundary)), pgt.vertex_template)
        rename = {b: hub for b in boundary}
        placement[hub] = tid
    else:
        for b in sorted(boundary):
            placement[b] = tid
    keep = inside | boundary
    edges = []
    for e in pgt.edges:
        if e.tail in keep and e.head in keep:
            u, v = rename.get(e.tail, e.tail), rename.get(e.head, e.head)
            if u != v:
                edges.append(Edge(u, v, e.weight))
    sedges = tuple(e for e in pgt.sibling_edges if e.tail in inside)
    return ParametricGraphTemplate(pgt.directed, templates, placement, tuple(edges), sedges)
