"""Maximum flows on parametric graph templates, computed on small rewritten graphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .core_model import INF, ModelError, ParametricGraphTemplate, WeightedGraph
from .transforms import edge_reweight, lift_instance, normalize_address

__all__ = ["FlowResult", "solve_max_flow", "max_all_st_flow", "max_single_st_flow", "cut_weight"]


@dataclass(frozen=True)
class FlowResult:
    value: Fraction | float
    source_side: frozenset
    working_graph: WeightedGraph | None
    source: object = None
    sink: object = None

    def cut_value(self):
        return cut_weight(self.working_graph, self.source_side)


def cut_weight(graph: WeightedGraph, side) -> Fraction | float:
    """Weight of the edges leaving ``side`` (either direction when undirected)."""
    total = Fraction(0)
    for u, v, w in graph.edges:
        if (u in side) != (v in side):
            if graph.directed and u not in side:
                continue
            total += w
    return total


class _Network:
    """Residual network for Dinic's algorithm with exact arithmetic."""

    def __init__(self, n: int):
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list = []

    def add(self, u: int, v: int, forward, backward=0) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(forward)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(backward)

    def _levels(self, s: int, t: int):
        level = [-1] * len(self.head)
        level[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for arc in self.head[x]:
                y = self.to[arc]
                if self.cap[arc] > 0 and level[y] < 0:
                    level[y] = level[x] + 1
                    queue.append(y)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int, limit):
        flow = Fraction(0)
        while flow < limit:
            level = self._levels(s, t)
            if level is None:
                break
            it = [0] * len(self.head)
            while True:
                pushed = self._augment(s, t, limit - flow, level, it)
                if not pushed:
                    break
                flow += pushed
        return flow

    def _augment(self, s, t, bound, level, it):
        # iterative DFS along the level graph
        path: list[int] = []
        x = s
        while True:
            if x == t:
                amount = bound
                for arc in path:
                    amount = min(amount, self.cap[arc])
                for arc in path:
                    self.cap[arc] -= amount
                    self.cap[arc ^ 1] += amount
                return amount
            advanced = False
            arcs = self.head[x]
            while it[x] < len(arcs):
                arc = arcs[it[x]]
                y = self.to[arc]
                if self.cap[arc] > 0 and level[y] == level[x] + 1:
                    path.append(arc)
                    x = y
                    advanced = True
                    break
                it[x] += 1
            if advanced:
                continue
            if not path:
                return 0
            level[x] = -1
            arc = path.pop()
            x = self.to[arc ^ 1]
            it[x] += 1

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            for arc in self.head[x]:
                y = self.to[arc]
                if self.cap[arc] > 0 and y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen


def solve_max_flow(graph: WeightedGraph, s, t) -> FlowResult:
    """Exact maximum flow with a minimum cut witness (the source side).

    Infinite edges get a capacity above the sum of all finite ones; a flow that
    reaches that bound is reported as infinite.
    """
    if s == t:
        raise ModelError("source and sink must differ")
    index = {v: i for i, v in enumerate(graph.vertices)}
    for x in (s, t):
        if x not in index:
            raise ModelError(f"unknown vertex {x!r}")
    finite = sum((Fraction(w) for _, _, w in graph.edges if w != INF), Fraction(0))
    big = finite + 1
    net = _Network(len(index))
    for u, v, w in graph.edges:
        cap = big if w == INF else Fraction(w)
        if u == v:
            continue
        net.add(index[u], index[v], cap, 0 if graph.directed else cap)
    value = net.max_flow(index[s], index[t], big)
    side = frozenset(graph.vertices[i] for i in net.reachable(index[s]))
    return FlowResult(INF if value >= big else value, side, graph, s, t)


def _require_plain(pgt: ParametricGraphTemplate) -> None:
    if pgt.sibling_edges:
        raise ModelError("flows are not supported on models with sibling edges")


def max_all_st_flow(pgt: ParametricGraphTemplate, s: str, t: str) -> FlowResult:
    """Flow from every instance of ``s`` to every instance of ``t``."""
    _require_plain(pgt)
    pgt.template_of(s), pgt.template_of(t)
    if s == t:
        raise ModelError("source and sink must differ")
    return solve_max_flow(edge_reweight(pgt), s, t)


def max_single_st_flow(pgt: ParametricGraphTemplate, s: str, s_addr, t: str, t_addr) -> FlowResult:
    """Flow between one addressed instance of ``s`` and one of ``t``.

    Both instances are lifted into the root by upwards partial instantiation,
    after which reweighting is exact. When the two instances sit in different
    copies of a template and the model is template-acyclic no path joins them
    and the value comes out as 0.
    """
    _require_plain(pgt)
    s_idx = normalize_address(pgt, s, s_addr)
    t_idx = normalize_address(pgt, t, t_addr)
    if s == t and s_idx == t_idx:
        raise ModelError("source and sink must be different instances")
    first = lift_instance(pgt, s, tuple(s_idx.values()))
    t_name, t_new = first.map_instance(t, tuple(t_idx.items()))
    second = lift_instance(first.model, t_name, t_new)
    return solve_max_flow(edge_reweight(second.model), s, t_name)
