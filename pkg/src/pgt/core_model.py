"""Parametric graph templates: model, validation and explicit instantiation.

A model is a template graph whose vertices are grouped into a tree of nested
templates. Each template carries a parameter saying how many times it is
replicated inside every copy of its parent. Vertices are stored with the
deepest template that contains them, so the template family is laminar by
construction; :func:`from_sets` builds a model from raw vertex sets and
reports families that are not.
"""

from __future__ import annotations

import math
import os
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "INF",
    "DEFAULT_BUDGET",
    "ModelError",
    "BudgetExceeded",
    "Edge",
    "SiblingEdge",
    "Template",
    "TemplateTree",
    "ParametricGraphTemplate",
    "ValidationReport",
    "WeightedGraph",
    "Instantiation",
    "as_weight",
    "laminar_violations",
    "from_sets",
    "validate",
    "template_of",
    "boundary_vertices",
    "instance_count",
    "instantiate",
    "instantiation_budget",
    "is_template_acyclic",
    "is_acyclic",
    "tid_key",
]

# Infinite capacity. A float sentinel compares exactly against Fractions and
# absorbs multiplication by positive parameters.
INF = math.inf
DEFAULT_BUDGET = 10**7

Address = tuple[tuple[str, int], ...]
InstanceVertex = tuple[str, Address]


class ModelError(ValueError):
    """A model or query violates a domain rule."""


class BudgetExceeded(ModelError):
    pass


def as_weight(value) -> Fraction | float:
    if isinstance(value, float) and math.isinf(value):
        if value < 0:
            raise ModelError("negative weight")
        return INF
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
        return INF
    try:
        w = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"bad weight {value!r}") from exc
    if w < 0:
        raise ModelError(f"negative weight {value!r}")
    return w


def tid_key(tid: str):
    """Sort key that orders numeric-looking template ids numerically."""
    digits = "".join(ch for ch in tid if ch.isdigit())
    prefix = tid.rstrip("0123456789")
    if digits and tid == prefix + digits:
        return (prefix, int(digits), tid)
    return (tid, -1, tid)


@dataclass(frozen=True)
class Edge:
    tail: str
    head: str
    weight: Fraction | float = Fraction(1)


@dataclass(frozen=True)
class SiblingEdge:
    """Edge from instance j of ``tail`` to instance (j + delta) mod P of ``head``."""

    tail: str
    head: str
    delta: int
    weight: Fraction | float = Fraction(1)


@dataclass(frozen=True)
class Template:
    id: str
    parent: str | None
    param: int = 1


@dataclass(frozen=True)
class TemplateTree:
    root: str
    parent: Mapping[str, str]
    children: Mapping[str, tuple[str, ...]]
    depth: Mapping[str, int]
    height: int

    def path_from_root(self, tid: str) -> list[str]:
        chain = [tid]
        while chain[-1] != self.root:
            chain.append(self.parent[chain[-1]])
        chain.reverse()
        return chain

    def preorder(self) -> list[str]:
        order, stack = [], [self.root]
        while stack:
            tid = stack.pop()
            order.append(tid)
            stack.extend(reversed(self.children[tid]))
        return order

    def postorder(self) -> list[str]:
        return list(reversed(self._reverse_postorder()))

    def _reverse_postorder(self) -> list[str]:
        order, stack = [], [self.root]
        while stack:
            tid = stack.pop()
            order.append(tid)
            stack.extend(self.children[tid])
        return order

    def is_ancestor(self, anc: str, tid: str) -> bool:
        """True when ``anc`` is ``tid`` or one of its ancestors."""
        while True:
            if tid == anc:
                return True
            if tid == self.root:
                return False
            tid = self.parent[tid]

    def lca(self, a: str, b: str) -> str:
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def subtree(self, tid: str) -> list[str]:
        out, stack = [], [tid]
        while stack:
            t = stack.pop()
            out.append(t)
            stack.extend(self.children[t])
        return out


@dataclass(frozen=True, eq=False)
class ParametricGraphTemplate:
    directed: bool
    templates: tuple[Template, ...]
    vertex_template: Mapping[str, str]
    edges: tuple[Edge, ...] = ()
    sibling_edges: tuple[SiblingEdge, ...] = ()

    @classmethod
    def build(
        cls,
        directed: bool,
        templates: Iterable,
        vertices: Mapping[str, str],
        edges: Iterable = (),
        sibling_edges: Iterable = (),
    ) -> "ParametricGraphTemplate":
        """Convenience constructor from plain tuples.

        ``templates`` holds ``(id, parent, param)`` triples (parent ``None`` for
        the root), ``edges`` holds ``(u, v)`` or ``(u, v, w)`` and
        ``sibling_edges`` holds ``(u, v, delta)`` or ``(u, v, delta, w)``.
        """
        tpls = tuple(t if isinstance(t, Template) else Template(t[0], t[1], int(t[2])) for t in templates)
        es = []
        for e in edges:
            if isinstance(e, Edge):
                es.append(e)
            else:
                es.append(Edge(e[0], e[1], as_weight(e[2]) if len(e) > 2 else Fraction(1)))
        ss = []
        for e in sibling_edges:
            if isinstance(e, SiblingEdge):
                ss.append(e)
            else:
                ss.append(SiblingEdge(e[0], e[1], int(e[2]), as_weight(e[3]) if len(e) > 3 else Fraction(1)))
        return cls(directed, tpls, dict(vertices), tuple(es), tuple(ss))

    def _key(self):
        # declaration order is not part of the model; edge multiplicity is
        return (
            self.directed,
            frozenset(self.templates),
            frozenset(self.vertex_template.items()),
            frozenset(Counter(self.edges).items()),
            frozenset(Counter(self.sibling_edges).items()),
        )

    def __eq__(self, other):
        if not isinstance(other, ParametricGraphTemplate):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def replace(self, **changes) -> "ParametricGraphTemplate":
        fields = dict(
            directed=self.directed,
            templates=self.templates,
            vertex_template=self.vertex_template,
            edges=self.edges,
            sibling_edges=self.sibling_edges,
        )
        fields.update(changes)
        return ParametricGraphTemplate(**fields)

    @property
    def vertices(self) -> list[str]:
        return list(self.vertex_template)

    @cached_property
    def params(self) -> dict[str, int]:
        return {t.id: t.param for t in self.templates}

    @cached_property
    def root(self) -> str:
        roots = [t.id for t in self.templates if t.parent is None]
        if len(roots) != 1:
            raise ModelError(f"expected exactly one root template, found {len(roots)}")
        return roots[0]

    @cached_property
    def tree(self) -> TemplateTree:
        root = self.root
        parent: dict[str, str] = {}
        children: dict[str, list[str]] = {t.id: [] for t in self.templates}
        for t in self.templates:
            if t.parent is None:
                parent[t.id] = t.id
            else:
                if t.parent not in children:
                    raise ModelError(f"template {t.id} has unknown parent {t.parent}")
                parent[t.id] = t.parent
                children[t.parent].append(t.id)
        depth = {root: 0}
        queue = deque([root])
        while queue:
            tid = queue.popleft()
            for c in children[tid]:
                depth[c] = depth[tid] + 1
                queue.append(c)
        if len(depth) != len(children):
            missing = sorted(set(children) - set(depth), key=tid_key)
            raise ModelError(f"templates not reachable from the root: {', '.join(missing)}")
        frozen = {k: tuple(sorted(v, key=tid_key)) for k, v in children.items()}
        return TemplateTree(root, parent, frozen, depth, max(depth.values()) + 1)

    @cached_property
    def members(self) -> dict[str, list[str]]:
        """Vertices whose deepest template is the key."""
        out: dict[str, list[str]] = {t.id: [] for t in self.templates}
        for v, tid in self.vertex_template.items():
            out[tid].append(v)
        return out

    @cached_property
    def _chains(self) -> dict[str, tuple[str, ...]]:
        tree = self.tree
        return {t.id: tuple(tree.path_from_root(t.id)[1:]) for t in self.templates}

    def chain(self, v: str) -> tuple[str, ...]:
        """Non-root templates containing ``v``, outermost first."""
        return self._chains[self.template_of(v)]

    def template_chain(self, tid: str) -> tuple[str, ...]:
        return self._chains[tid]

    def template_of(self, v: str) -> str:
        try:
            return self.vertex_template[v]
        except KeyError:
            raise ModelError(f"unknown vertex {v!r}") from None

    def template_set(self, tid: str) -> set[str]:
        """All vertices of ``tid`` including those of descendant templates."""
        out: set[str] = set()
        for t in self.tree.subtree(tid):
            out.update(self.members[t])
        return out

    @cached_property
    def ancestor_products(self) -> dict[str, int]:
        """Product of parameters from the root down to each template, inclusive."""
        prod = {}
        for tid in self.tree.preorder():
            p = self.params[tid]
            prod[tid] = p if tid == self.root else prod[self.tree.parent[tid]] * p
        return prod

    def instance_count(self, v: str) -> int:
        return self.ancestor_products[self.template_of(v)]

    def total_instances(self) -> int:
        return sum(self.ancestor_products[t] for t in self.vertex_template.values())

    def adjacency(self) -> dict[str, list[str]]:
        """Neighbour lists over plain edges, both directions for undirected models."""
        adj: dict[str, list[str]] = {v: [] for v in self.vertex_template}
        for e in self.edges:
            adj[e.tail].append(e.head)
            if not self.directed:
                adj[e.head].append(e.tail)
        return adj


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_bad(self) -> None:
        if self.violations:
            raise ModelError("; ".join(self.violations))


def laminar_violations(sets: Mapping[str, Iterable[str]]) -> list[str]:
    """Pairs of sets that are neither disjoint nor strictly nested."""
    items = [(tid, frozenset(vs)) for tid, vs in sets.items()]
    out = []
    for i, (a, sa) in enumerate(items):
        for b, sb in items[i + 1 :]:
            if not (sa & sb):
                continue
            if sa == sb:
                out.append(f"non-laminar pair {a}, {b}: identical vertex sets")
            elif not (sa < sb or sb < sa):
                out.append(f"non-laminar pair {a}, {b}")
    return out


def from_sets(
    directed: bool,
    vertex_sets: Mapping[str, Iterable[str]],
    params: Mapping[str, int],
    edges: Iterable = (),
    sibling_edges: Iterable = (),
) -> ParametricGraphTemplate:
    """Build a model from a laminar family of vertex sets.

    The root is the set containing every vertex. Raises :class:`ModelError`
    naming each offending pair when the family is not laminar.
    """
    sets = {tid: frozenset(vs) for tid, vs in vertex_sets.items()}
    problems = laminar_violations(sets)
    universe = frozenset().union(*sets.values()) if sets else frozenset()
    roots = [tid for tid, vs in sets.items() if vs == universe]
    if len(roots) != 1:
        problems.append("missing root template containing every vertex")
    if problems:
        raise ModelError("; ".join(problems))
    root = roots[0]
    parent: dict[str, str | None] = {root: None}
    for tid, vs in sets.items():
        if tid == root:
            continue
        supersets = [o for o, os_ in sets.items() if o != tid and vs < os_]
        parent[tid] = min(supersets, key=lambda o: len(sets[o]))
    deepest = {}
    for v in sorted(universe):
        deepest[v] = min((tid for tid, vs in sets.items() if v in vs), key=lambda t: len(sets[t]))
    tpls = [(tid, parent[tid], params.get(tid, 1)) for tid in sets]
    tpls.sort(key=lambda t: (t[1] is not None, len(universe) - len(sets[t[0]])))
    return ParametricGraphTemplate.build(directed, tpls, deepest, edges, sibling_edges)


def validate(pgt: ParametricGraphTemplate) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    ids = [t.id for t in pgt.templates]
    if len(set(ids)) != len(ids):
        bad.append("duplicate template id")
    roots = [t for t in pgt.templates if t.parent is None]
    if not roots:
        bad.append("missing root template")
        return report
    if len(roots) > 1:
        bad.append("more than one root template: " + ", ".join(t.id for t in roots))
        return report
    for t in pgt.templates:
        if not isinstance(t.param, int) or t.param < 1:
            bad.append(f"bad parameter {t.param!r} for template {t.id}")
    if roots[0].param != 1:
        bad.append(f"root template {roots[0].id} must have parameter 1")
    try:
        tree = pgt.tree
    except ModelError as exc:
        bad.append(str(exc))
        return report
    for v, tid in pgt.vertex_template.items():
        if tid not in tree.parent:
            bad.append(f"vertex {v} placed in unknown template {tid}")
    if bad:
        return report
    for e in pgt.edges:
        if e.tail not in pgt.vertex_template or e.head not in pgt.vertex_template:
            bad.append(f"edge ({e.tail}, {e.head}) has an unknown endpoint")
            continue
        if e.weight < 0:
            bad.append(f"edge ({e.tail}, {e.head}) has negative weight")
        if e.tail == e.head:
            bad.append(f"self-loop ({e.tail}, {e.head}) is only allowed as a sibling edge")
        tu, tv = pgt.vertex_template[e.tail], pgt.vertex_template[e.head]
        if tu != tv and tree.parent[tu] != tv and tree.parent[tv] != tu:
            bad.append(f"skipping edge ({e.tail}, {e.head}) joins templates {tu} and {tv}")
    for e in pgt.sibling_edges:
        if e.tail not in pgt.vertex_template or e.head not in pgt.vertex_template:
            bad.append(f"sibling edge ({e.tail}, {e.head}) has an unknown endpoint")
            continue
        if e.weight < 0:
            bad.append(f"sibling edge ({e.tail}, {e.head}) has negative weight")
        if pgt.vertex_template[e.tail] != pgt.vertex_template[e.head]:
            bad.append(f"sibling edge ({e.tail}, {e.head}) crosses templates")
    return report


def template_of(pgt: ParametricGraphTemplate, v: str) -> str:
    return pgt.template_of(v)


def boundary_vertices(pgt: ParametricGraphTemplate, tid: str) -> set[str]:
    """Parent-template vertices adjacent to a vertex whose deepest template is ``tid``."""
    tree = pgt.tree
    if tid == tree.root:
        raise ModelError("the root template has no boundary")
    if tid not in tree.parent:
        raise ModelError(f"unknown template {tid!r}")
    parent = tree.parent[tid]
    out = set()
    for e in pgt.edges:
        tu, tv = pgt.vertex_template[e.tail], pgt.vertex_template[e.head]
        if tu == tid and tv == parent:
            out.add(e.head)
        elif tv == tid and tu == parent:
            out.add(e.tail)
    return out


def instance_count(pgt: ParametricGraphTemplate, v: str) -> int:
    return pgt.instance_count(v)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Plain weighted graph. Undirected graphs list each edge once."""

    directed: bool
    vertices: tuple
    edges: tuple  # (u, v, weight)

    def adjacency(self) -> dict:
        adj = {v: [] for v in self.vertices}
        for u, v, _ in self.edges:
            adj[u].append(v)
            if not self.directed:
                adj[v].append(u)
        return adj

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class Instantiation(WeightedGraph):
    """Explicit graph whose vertices are ``(origin, address)`` pairs."""

    def instances(self, origin: str) -> list[InstanceVertex]:
        return [x for x in self.vertices if x[0] == origin]

    def multiplicities(self) -> dict[str, int]:
        out: dict[str, int] = defaultdict(int)
        for origin, _ in self.vertices:
            out[origin] += 1
        return dict(out)


def instantiation_budget(budget: int | None = None) -> int:
    if budget is not None:
        return budget
    env = os.environ.get("PGT_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def _addresses(chain: Sequence[str], params: Mapping[str, int]) -> Iterator[Address]:
    for idx in product(*(range(params[t]) for t in chain)):
        yield tuple(zip(chain, idx))


def instantiate(pgt: ParametricGraphTemplate, budget: int | None = None) -> Instantiation:
    """Expand every template into its copies.

    Addresses list ``(template, index)`` for every non-root template containing
    the vertex, outermost first, so the result is deterministic.
    """
    limit = instantiation_budget(budget)
    total = pgt.total_instances()
    if total > limit:
        raise BudgetExceeded(f"instantiation has {total} vertices, budget is {limit}")
    params = pgt.params
    vertices = []
    for v in pgt.vertex_template:
        for addr in _addresses(pgt.chain(v), params):
            vertices.append((v, addr))
    edges = []
    for e in pgt.edges:
        cu, cv = pgt.chain(e.tail), pgt.chain(e.head)
        k = 0
        while k < min(len(cu), len(cv)) and cu[k] == cv[k]:
            k += 1
        for shared in _addresses(cu[:k], params):
            for tail_rest in _addresses(cu[k:], params):
                for head_rest in _addresses(cv[k:], params):
                    edges.append(((e.tail, shared + tail_rest), (e.head, shared + head_rest), e.weight))
    for e in pgt.sibling_edges:
        chain = pgt.chain(e.tail)
        for addr in _addresses(chain, params):
            if chain:
                tid, j = addr[-1]
                head_addr = addr[:-1] + ((tid, (j + e.delta) % params[tid]),)
            else:
                head_addr = addr
            edges.append(((e.tail, addr), (e.head, head_addr), e.weight))
    return Instantiation(pgt.directed, tuple(vertices), tuple(edges))


def is_template_acyclic(pgt: ParametricGraphTemplate) -> bool:
    """True iff no walk leaves the vertex set of a template and later re-enters it.

    A template's set includes the vertices of its descendants, so the root is
    never left. For every non-root template we search forward from each
    edge leaving its set; reaching the set again closes a template-cycle.
    Sibling edges stay inside one template and take part like plain edges.
    """
    adj = pgt.adjacency()
    for e in pgt.sibling_edges:
        adj[e.tail].append(e.head)
        if not pgt.directed:
            adj[e.head].append(e.tail)
    reach_cache: dict[str, set[str]] = {}

    def reach(start: str) -> set[str]:
        if start not in reach_cache:
            seen = {start}
            stack = [start]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            reach_cache[start] = seen
        return reach_cache[start]

    for t in pgt.params:
        if t == pgt.root:
            continue
        inside = pgt.template_set(t)
        for x in inside:
            for z in adj[x]:
                if z not in inside and not inside.isdisjoint(reach(z)):
                    return False
    return True


def is_acyclic(pgt: ParametricGraphTemplate) -> bool:
    """True iff the directed template graph, sibling edges included, has no cycle."""
    adj = pgt.adjacency()
    for e in pgt.sibling_edges:
        adj[e.tail].append(e.head)
    indeg = {v: 0 for v in adj}
    for outs in adj.values():
        for y in outs:
            indeg[y] += 1
    queue = deque(v for v, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        x = queue.popleft()
        seen += 1
        for y in adj[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                queue.append(y)
    return seen == len(adj)
