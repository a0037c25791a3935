"""Rooted tree pattern matching on template-acyclic directed models.

Hierarchical color coding: guess the template-tree level of every pattern
vertex, color template vertices with level-specific palettes, then run a
dynamic program over pattern subtrees whose entries record the colors used on
the *spine* (the part of an occurrence at the root's level or above).

Parts of an occurrence that hang below the spine sit in copies of side
templates whose instance can be chosen freely. When a template has fewer
copies than the pattern could need, entries also carry the list of branches
entering each such template so that the available copies are never
over-committed. Every reported occurrence is rebuilt into an explicit
embedding and checked before it is returned.
"""

from __future__ import annotations

import math
import itertools
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .core_model import ModelError, ParametricGraphTemplate, is_template_acyclic
from .maxflow import max_all_st_flow
from .transforms import lift_instance

__all__ = [
    "TreePattern",
    "Coloring",
    "ColorTable",
    "MatchReport",
    "default_trials",
    "enumerate_level_mappings",
    "palette_partition",
    "color_code",
    "match_tree_once",
    "match_tree",
    "occurs",
    "disjoint_paths",
    "PathsReport",
    "path_pattern",
]

EPSILON = 2.0**-20


def default_trials(k: int, epsilon: float = EPSILON) -> int:
    return math.ceil(math.exp(k) * math.log(1 / epsilon))


@dataclass(frozen=True)
class TreePattern:
    """Rooted tree; edges point from parent to child."""

    root: str
    children: Mapping[str, tuple[str, ...]]

    @classmethod
    def from_parents(cls, nodes: Sequence[str], parent: Mapping[str, str]) -> "TreePattern":
        nodes = list(dict.fromkeys(list(nodes) + list(parent) + list(parent.values())))
        if not nodes:
            raise ModelError("empty pattern")
        roots = [v for v in nodes if v not in parent]
        if len(roots) != 1:
            raise ModelError(f"pattern must have exactly one root, found {len(roots)}")
        children: dict[str, list[str]] = {v: [] for v in nodes}
        for v in nodes:
            if v in parent:
                children[parent[v]].append(v)
        pattern = cls(roots[0], {v: tuple(cs) for v, cs in children.items()})
        if len(pattern.preorder()) != len(nodes):
            raise ModelError("pattern is not a connected tree")
        return pattern

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], nodes: Sequence[str] = ()) -> "TreePattern":
        edges = list(edges)
        parent = {}
        for u, v in edges:
            if v in parent:
                raise ModelError(f"pattern vertex {v} has two parents")
            parent[v] = u
        return cls.from_parents(list(nodes) + [x for e in edges for x in e], parent)

    def preorder(self) -> list[str]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    @property
    def k(self) -> int:
        return len(self.children)

    @property
    def parent(self) -> dict[str, str]:
        return {c: p for p, cs in self.children.items() for c in cs}

    def edges(self) -> list[tuple[str, str]]:
        return [(p, c) for p in self.preorder() for c in self.children[p]]

    def leaves(self) -> list[str]:
        return [v for v in self.preorder() if not self.children[v]]


def enumerate_level_mappings(pattern: TreePattern, h: int, k: int | None = None) -> list[dict[str, int]]:
    """Every assignment of template-tree levels in ``[0, h)`` to pattern vertices
    where each pattern edge keeps the level or moves it by one."""
    order = pattern.preorder()
    parent = pattern.parent
    out: list[dict[str, int]] = []

    def extend(i: int, levels: dict[str, int]) -> None:
        if i == len(order):
            out.append(dict(levels))
            return
        v = order[i]
        base = levels[parent[v]]
        for lvl in (base - 1, base, base + 1):
            if 0 <= lvl < h:
                levels[v] = lvl
                extend(i + 1, levels)
        levels.pop(v, None)

    for start in range(h):
        extend(1, {order[0]: start})
    return out


def palette_partition(mapping: Mapping[str, int], k: int) -> dict[int, tuple[int, ...]]:
    """Split colors ``0..k-1`` among level residues mod ``k+1`` by pattern-vertex counts."""
    counts: dict[int, int] = defaultdict(int)
    for lvl in mapping.values():
        counts[lvl % (k + 1)] += 1
    palette, nxt = {}, 0
    for residue in sorted(counts):
        palette[residue] = tuple(range(nxt, nxt + counts[residue]))
        nxt += counts[residue]
    return palette


@dataclass(frozen=True)
class Coloring:
    color: Mapping[str, int | None]
    palette: Mapping[int, tuple[int, ...]]
    modulus: int


def color_code(pgt: ParametricGraphTemplate, mapping: Mapping[str, int], seed=0, k: int | None = None) -> Coloring:
    """Random level-respecting coloring; ``seed`` may be an int or a ``random.Random``."""
    k = k if k is not None else len(mapping)
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    palette = palette_partition(mapping, k)
    depth = pgt.tree.depth
    color = {}
    for v, tid in pgt.vertex_template.items():
        choices = palette.get(depth[tid] % (k + 1), ())
        color[v] = rng.choice(choices) if choices else None
    return Coloring(color, palette, k + 1)


# A table entry is ``(spine_mask, pending)``. ``pending`` is a sorted tuple of
# branches ``(template, mask, sub_pending)`` entering templates whose copies
# are scarce; each branch occupies one copy unless packed with others.


@dataclass
class ColorTable:
    """Entries per pattern subtree and template vertex, with back-pointers."""

    tables: dict = field(default_factory=dict)
    coloring: Coloring | None = None
    mapping: Mapping[str, int] | None = None

    def entries(self, key, x) -> dict:
        return self.tables.get(key, {}).get(x, {})

    def color_sets(self, key, x) -> set[frozenset]:
        return {frozenset(_bits(mask)) for mask, _ in self.entries(key, x)}


def _bits(mask: int) -> list[int]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _partitions(items: list, limit: int):
    """Set partitions of ``items`` into at most ``limit`` blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest, limit):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        if len(part) < limit:
            yield [[first]] + part


def _require_matchable(pgt: ParametricGraphTemplate) -> None:
    if not pgt.directed:
        raise ModelError("tree matching needs a directed model")
    if pgt.sibling_edges:
        raise ModelError("tree matching does not support sibling edges")
    if not is_template_acyclic(pgt):
        raise ModelError("tree matching needs a template-acyclic model")


class _Matcher:
    """Model data reused across trials."""

    def __init__(self, pgt: ParametricGraphTemplate, pattern: TreePattern):
        _require_matchable(pgt)
        self.pgt = pgt
        self.pattern = pattern
        self.k = pattern.k
        tree = pgt.tree
        self.tmpl = dict(pgt.vertex_template)
        self.depth = {v: tree.depth[t] for v, t in self.tmpl.items()}
        self.params = pgt.params
        self.scarce = {t for t, p in self.params.items() if p < self.k - 1}
        self.arcs = []  # (x, y, relation)
        for e in pgt.edges:
            tx, ty = self.tmpl[e.tail], self.tmpl[e.head]
            if tx == ty:
                rel = "same"
            elif tree.parent[ty] == tx and ty != tree.root:
                rel = "down"
            else:
                rel = "up"
            self.arcs.append((e.tail, e.head, rel))
        # subtree keys: (a, j) = a with its first j children attached
        self.order = []
        for a in reversed(pattern.preorder()):
            for j in range(len(pattern.children[a]) + 1):
                self.order.append((a, j))

    # -- packing -----------------------------------------------------------
    def _fits(self, tid: str, branches: list) -> bool:
        limit = self.params[tid]
        if len(branches) <= limit:
            return True
        return any(all(self._group_ok(block) for block in part) for part in _partitions(branches, limit))

    def _group_ok(self, block: list) -> bool:
        mask = 0
        subs = []
        for bmask, sub in block:
            if mask & bmask:
                return False
            mask |= bmask
            subs.extend(sub)
        return self._pending_ok(subs)

    def _pending_ok(self, pending: Iterable) -> bool:
        by_template = defaultdict(list)
        for tid, mask, sub in pending:
            by_template[tid].append((mask, sub))
        return all(self._fits(tid, bs) for tid, bs in by_template.items() if len(bs) > 1)

    # -- dynamic program ---------------------------------------------------
    def run(
        self,
        mapping: Mapping[str, int],
        coloring: Coloring,
        allow: Callable[[str, str], bool] | None = None,
        early: Callable[[str, str], bool] | None = None,
    ) -> ColorTable:
        pattern, color, depth = self.pattern, coloring.color, self.depth
        tables: dict = {}
        candidates = defaultdict(list)
        for x, d in depth.items():
            if color[x] is not None:
                candidates[d].append(x)
        for a, j in self.order:
            table: dict = defaultdict(dict)
            if j == 0:
                for x in candidates[mapping[a]]:
                    if allow is None or allow(a, x):
                        table[x][(1 << color[x], ())] = ("base",)
            else:
                child = pattern.children[a][j - 1]
                left = tables[(a, j - 1)]
                right = tables[(child, len(pattern.children[child]))]
                for x, y, rel in self.arcs:
                    lx, ry = left.get(x), right.get(y)
                    if not lx or not ry:
                        continue
                    tx = table[x]
                    for s1 in lx:
                        m1, p1 = s1
                        for s2 in ry:
                            m2, p2 = s2
                            if rel == "down":
                                ty = self.tmpl[y]
                                if ty in self.scarce:
                                    pend = tuple(sorted(p1 + ((ty, m2, p2),)))
                                    if not self._pending_ok(pend):
                                        continue
                                else:
                                    pend = p1
                                state = (m1, pend)
                            else:
                                if m1 & m2:
                                    continue
                                pend = tuple(sorted(p1 + p2)) if p2 else p1
                                if p1 and p2 and not self._pending_ok(pend):
                                    continue
                                state = (m1 | m2, pend)
                            if state not in tx:
                                tx[state] = ("join", s1, y, s2)
                if early is not None and j == 1 and not pattern.children[a][1:]:
                    for x in candidates[mapping[a]]:
                        if early(a, x) and (allow is None or allow(a, x)):
                            table[x].setdefault((1 << color[x], ()), ("stop",))
            tables[(a, j)] = {x: st for x, st in table.items() if st}
        return ColorTable(tables, coloring, mapping)

    def supported(
        self,
        mapping: Mapping[str, int],
        allow: Callable[[str, str], bool] | None = None,
        early: Callable[[str, str], bool] | None = None,
    ) -> set[str]:
        """Roots of a level-respecting homomorphic image of the pattern, colors ignored.

        Every colorful table entry is such an image, so a root outside this
        set can never be reported for ``mapping``.
        """
        pattern = self.pattern
        out_arcs = defaultdict(set)
        for x, y, _ in self.arcs:
            out_arcs[x].add(y)
        hom: dict[str, set[str]] = {}
        for a in reversed(pattern.preorder()):
            kids = pattern.children[a]
            ok = set()
            for x, d in self.depth.items():
                if d != mapping[a] or (allow is not None and not allow(a, x)):
                    continue
                if all(out_arcs[x] & hom[c] for c in kids):
                    ok.add(x)
                elif early is not None and len(kids) == 1 and early(a, x):
                    ok.add(x)
            hom[a] = ok
        return hom[pattern.root]

    def trace(self, table: ColorTable, x: str, state) -> dict[str, str]:
        """Pattern-to-template-vertex map behind one entry at the full pattern."""
        psi: dict[str, str] = {}
        pattern = self.pattern

        def walk(a, j, x, state):
            if j == 0:
                psi[a] = x
                return
            bp = table.tables[(a, j)][x][state]
            if bp[0] == "stop":
                psi[a] = x
                return
            _, s1, y, s2 = bp
            walk(a, j - 1, x, s1)
            child = pattern.children[a][j - 1]
            walk(child, len(pattern.children[child]), y, s2)

        walk(pattern.root, len(pattern.children[pattern.root]), x, state)
        return psi

    def realize(self, psi: Mapping[str, str]) -> dict[str, tuple] | None:
        """Choose copies for every descent so the embedding is injective."""
        pgt, pattern = self.pgt, self.pattern
        order = [a for a in pattern.preorder() if a in psi]
        parent = pattern.parent
        root = order[0]
        place: dict[str, tuple] = {}
        used: set = set()
        width = len(order)

        def addr_of(a):
            b = parent[a]
            base = place[b][1]
            x, y = psi[b], psi[a]
            tx, ty = self.tmpl[x], self.tmpl[y]
            if tx == ty:
                return [base]
            if pgt.tree.parent[tx] == ty and tx != pgt.tree.root:
                return [base[:-1]]
            return [base + ((ty, i),) for i in range(min(self.params[ty], width))]

        def go(i):
            if i == len(order):
                return True
            a = order[i]
            for addr in addr_of(a):
                key = (psi[a], addr)
                if key in used:
                    continue
                used.add(key)
                place[a] = key
                if go(i + 1):
                    return True
                used.discard(key)
            place.pop(a, None)
            return False

        start = (psi[root], tuple((t, 0) for t in pgt.chain(psi[root])))
        place[root] = start
        used.add(start)
        return dict(place) if go(1) else None


@dataclass
class MatchReport:
    found: bool
    per_root: dict[str, bool]
    witnesses: dict[str, dict[str, tuple]]
    mapping_count: int
    trials_run: int


def match_tree_once(
    pgt: ParametricGraphTemplate, pattern: TreePattern, mapping: Mapping[str, int], coloring: Coloring
) -> ColorTable:
    return _Matcher(pgt, pattern).run(mapping, coloring)


def match_tree(
    pgt: ParametricGraphTemplate,
    pattern: TreePattern,
    trials: int | None = None,
    seed: int = 0,
    root: str | None = None,
) -> MatchReport:
    """Color-coding search for occurrences rooted at each template vertex.

    Every ``True`` in the report comes with an embedding into the
    instantiation that was checked for injectivity. With ``root`` set the
    search stops as soon as that vertex is certified.
    """
    matcher = _Matcher(pgt, pattern)
    k = pattern.k
    h = pgt.tree.height
    mappings = enumerate_level_mappings(pattern, h, k)
    if len(mappings) > h * 3 ** (k - 1):
        raise AssertionError("level mapping count exceeds h*3^(k-1)")
    trials = default_trials(k) if trials is None else trials
    per_root = {v: False for v in pgt.vertex_template}
    witnesses: dict[str, dict] = {}
    if root is not None:
        pgt.template_of(root)
    targets = set(per_root) if root is None else {root}
    if k > pgt.total_instances():
        return MatchReport(False, per_root, witnesses, len(mappings), 0)
    support = [matcher.supported(m) & targets for m in mappings]
    if not any(support):
        return MatchReport(False, per_root, witnesses, len(mappings), 0)
    rng = random.Random(seed)
    run = 0
    for _ in range(trials):
        run += 1
        for mapping, roots in zip(mappings, support):
            coloring = color_code(pgt, mapping, rng, k)
            if all(per_root[x] for x in roots):
                continue
            table = matcher.run(mapping, coloring)
            full = table.tables.get((pattern.root, len(pattern.children[pattern.root])), {})
            for x, states in full.items():
                if per_root[x] or x not in targets:
                    continue
                for state in states:
                    emb = matcher.realize(matcher.trace(table, x, state))
                    if emb is not None:
                        per_root[x] = True
                        witnesses[x] = emb
                        break
            if all(per_root[x] for roots in support for x in roots):
                return MatchReport(any(per_root.values()), per_root, witnesses, len(mappings), run)
    return MatchReport(any(per_root.values()), per_root, witnesses, len(mappings), run)


def occurs(pgt: ParametricGraphTemplate, pattern: TreePattern, trials: int | None = None, seed: int = 0):
    report = match_tree(pgt, pattern, trials, seed)
    return report.found, report.per_root


def path_pattern(k_paths: int, length: int) -> TreePattern:
    """Root with ``k_paths`` branches of ``length - 1`` vertices each."""
    parent = {}
    nodes = ["r"]
    for i in range(k_paths):
        prev = "r"
        for j in range(1, length):
            name = f"p{i}_{j}"
            nodes.append(name)
            parent[name] = prev
            prev = name
    return TreePattern.from_parents(nodes, parent)


@dataclass
class PathsReport:
    found: bool
    paths: list[list[tuple]]
    direct: int


def disjoint_paths(
    pgt: ParametricGraphTemplate,
    s: str,
    t: str,
    k_paths: int,
    length: int,
    mode: str = "exactly",
    trials: int | None = None,
    seed: int = 0,
    max_pattern: int = 16,
) -> PathsReport:
    """Search for ``k_paths`` internally disjoint paths from copy 0 of ``s``
    to the copies of ``t`` (all copies of ``t`` act as one sink).

    ``mode`` is ``exactly`` (every path has ``length`` edges) or ``at_most``
    (each has between 1 and ``length`` edges).
    """
    mode = {"exact": "exactly", "atmost": "at_most"}.get(mode, mode)
    if mode not in ("exactly", "at_most"):
        raise ModelError(f"unknown mode {mode!r}")
    if k_paths < 1 or length < 1:
        raise ModelError("need at least one path of positive length")
    if s == t:
        raise ModelError("source and sink must differ")
    if k_paths * length > max_pattern:
        raise ModelError(f"k*L = {k_paths * length} exceeds the pattern budget {max_pattern}")
    ts, tt = pgt.template_of(s), pgt.template_of(t)
    tree = pgt.tree
    s_addr = tuple((x, 0) for x in pgt.chain(s))
    direct_edges = [e for e in pgt.edges if e.tail == s and e.head == t]
    reach = pgt.ancestor_products[tt] // pgt.ancestor_products[tree.lca(ts, tt)]
    direct = len(direct_edges) * reach
    direct_paths = []
    for e in direct_edges:
        for addr in _sink_copies(pgt, s, s_addr, t, reach):
            direct_paths.append([(s, s_addr), (t, addr)])
    if length == 1:
        return PathsReport(direct >= k_paths, direct_paths[:k_paths] if direct >= k_paths else [], direct)
    need = k_paths if mode == "exactly" else k_paths - direct
    if mode == "at_most" and need <= 0:
        return PathsReport(True, direct_paths[:k_paths], direct)
    model = pgt
    if mode == "at_most":
        model = pgt.replace(edges=tuple(e for e in pgt.edges if not (e.tail == s and e.head == t)))
    _require_matchable(model)
    if disjoint_bound(model, s, t) < need:
        return PathsReport(False, [], direct)
    pattern = path_pattern(need, length)
    matcher = _Matcher(model, pattern)
    feeds_sink = {e.tail for e in model.edges if e.head == t}
    leaves = set(pattern.leaves())

    def allow(a, x):
        if a == pattern.root:
            return x == s
        if x == t:
            return False
        return a not in leaves or x in feeds_sink

    early = (lambda a, x: x in feeds_sink) if mode == "at_most" else None
    k = pattern.k
    mappings = [m for m in enumerate_level_mappings(pattern, tree.height, k) if m[pattern.root] == tree.depth[ts]]
    mappings = [m for m in mappings if s in matcher.supported(m, allow, early)]
    trials = default_trials(k) if trials is None else trials
    rng = random.Random(seed)
    key = (pattern.root, len(pattern.children[pattern.root]))
    for _ in range(trials):
        for mapping in mappings:
            coloring = color_code(model, mapping, rng, k)
            table = matcher.run(mapping, coloring, allow, early)
            for state in table.tables.get(key, {}).get(s, {}):
                psi = matcher.trace(table, s, state)
                emb = matcher.realize(psi)
                if emb is None:
                    continue
                paths = []
                for i in range(need):
                    branch = [pattern.root] + [f"p{i}_{j}" for j in range(1, length) if f"p{i}_{j}" in emb]
                    hops = [emb[b] for b in branch]
                    last = hops[-1]
                    hops.append(_sink_step(model, last, t))
                    paths.append(hops)
                kept = direct_paths if mode == "at_most" else []
                return PathsReport(True, kept + paths, direct)
    return PathsReport(False, [], direct)


def disjoint_bound(pgt: ParametricGraphTemplate, s: str, t: str):
    """Upper bound on internally disjoint paths from copy 0 of ``s`` to the merged copies of ``t``.

    Max flow with unit capacities on edges and on every vertex but the
    endpoints, after lifting ``s`` into the root; lengths are ignored.
    """
    lifted = lift_instance(pgt, s, tuple((x, 0) for x in pgt.chain(s))).model
    ends = (s, t)
    place, edges = {}, []
    for v, tid in lifted.vertex_template.items():
        if v in ends:
            place[v] = tid
        else:
            place[(v, "in")] = place[(v, "out")] = tid
            edges.append(((v, "in"), (v, "out"), 1))
    for e in lifted.edges:
        edges.append((e.tail if e.tail in ends else (e.tail, "out"), e.head if e.head in ends else (e.head, "in"), 1))
    split = ParametricGraphTemplate.build(True, [(x.id, x.parent, x.param) for x in lifted.templates], place, edges)
    return max_all_st_flow(split, s, t).value


def _toward(pgt, addr, tv, tt):
    """Address prefix kept and templates to descend when moving from ``tv`` to ``tt``."""
    lca = pgt.tree.lca(tv, tt)
    keep = addr[: len(pgt.template_chain(lca))]
    return keep, pgt.template_chain(tt)[len(keep):]


def _sink_copies(pgt, s, s_addr, t, count):
    keep, down = _toward(pgt, s_addr, pgt.template_of(s), pgt.template_of(t))
    ranges = [range(pgt.params[x]) for x in down]
    out = [keep + tuple(zip(down, idx)) for idx in itertools.product(*ranges)]
    assert len(out) == count
    return out


def _sink_step(pgt, vertex, t):
    v, addr = vertex
    keep, down = _toward(pgt, addr, pgt.template_of(v), pgt.template_of(t))
    return (t, keep + tuple((x, 0) for x in down))
