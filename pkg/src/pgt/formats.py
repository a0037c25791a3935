"""Line-oriented text formats for models, graphs, patterns and decompositions."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .core_model import (
    INF,
    Edge,
    Instantiation,
    ModelError,
    ParametricGraphTemplate,
    SiblingEdge,
    Template,
    WeightedGraph,
    as_weight,
)


class FormatError(ModelError):
    pass


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _read(source) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    return source


def format_weight(w) -> str:
    if w == INF:
        return "inf"
    w = Fraction(w)
    return str(w.numerator) if w.denominator == 1 else f"{w.numerator}/{w.denominator}"


def _header(lineno, toks, magic):
    if len(toks) < 2 or toks[0] != magic or toks[1] != "1":
        raise FormatError(f"line {lineno}: expected '{magic} 1' header")


def _direction(lineno, tok) -> bool:
    if tok not in ("directed", "undirected"):
        raise FormatError(f"line {lineno}: expected directed or undirected, got {tok!r}")
    return tok == "directed"


def _edge_tail(lineno, rest):
    """Parse ``[w <r>] [delta <int>]`` keyword pairs."""
    opts = {}
    if len(rest) % 2:
        raise FormatError(f"line {lineno}: dangling token {rest[-1]!r}")
    for key, value in zip(rest[::2], rest[1::2]):
        if key not in ("w", "delta") or key in opts:
            raise FormatError(f"line {lineno}: unexpected {key!r}")
        opts[key] = value
    return opts


def parse_pgt(source) -> ParametricGraphTemplate:
    text = _read(source)
    directed = None
    templates: dict[str, Template] = {}
    placement: dict[str, str] = {}
    edges, sedges = [], []
    for lineno, toks in _lines(text):
        if directed is None:
            _header(lineno, toks, "pgt")
            if len(toks) != 3:
                raise FormatError(f"line {lineno}: expected 'pgt 1 directed|undirected'")
            directed = _direction(lineno, toks[2])
            continue
        kind = toks[0]
        try:
            if kind == "template":
                if len(toks) != 6 or toks[2] != "parent" or toks[4] != "param":
                    raise FormatError(f"line {lineno}: expected 'template <id> parent <id|-> param <int>'")
                tid, parent = toks[1], toks[3]
                if tid in templates:
                    raise FormatError(f"line {lineno}: duplicate template {tid}")
                if parent != "-" and parent not in templates:
                    raise FormatError(f"line {lineno}: parent {parent} must be declared before {tid}")
                templates[tid] = Template(tid, None if parent == "-" else parent, int(toks[5]))
            elif kind == "vertex":
                if len(toks) != 4 or toks[2] != "in":
                    raise FormatError(f"line {lineno}: expected 'vertex <name> in <template>'")
                v, tid = toks[1], toks[3]
                if tid not in templates:
                    raise FormatError(f"line {lineno}: unknown template {tid}")
                if v in placement and placement[v] != tid:
                    placement[v] = _deeper(templates, placement[v], tid, v, lineno)
                else:
                    placement[v] = tid
            elif kind == "edge":
                if len(toks) < 3:
                    raise FormatError(f"line {lineno}: expected 'edge <u> <v> [w <r>]'")
                opts = _edge_tail(lineno, toks[3:])
                if "delta" in opts:
                    raise FormatError(f"line {lineno}: delta belongs on sedge lines")
                edges.append(Edge(toks[1], toks[2], as_weight(opts.get("w", 1))))
            elif kind == "sedge":
                opts = _edge_tail(lineno, toks[3:])
                if len(toks) < 3 or "delta" not in opts:
                    raise FormatError(f"line {lineno}: expected 'sedge <u> <v> [w <r>] delta <int>'")
                sedges.append(SiblingEdge(toks[1], toks[2], int(opts["delta"]), as_weight(opts.get("w", 1))))
            else:
                raise FormatError(f"line {lineno}: unknown record {kind!r}")
        except ValueError as exc:
            if isinstance(exc, ModelError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from exc
    if directed is None:
        raise FormatError("empty model file")
    return ParametricGraphTemplate(directed, tuple(templates.values()), placement, tuple(edges), tuple(sedges))


def _deeper(templates, a, b, v, lineno):
    def ancestors(t):
        out = []
        while t is not None:
            out.append(t)
            t = templates[t].parent
        return out

    if a in ancestors(b):
        return b
    if b in ancestors(a):
        return a
    raise FormatError(f"line {lineno}: non-laminar pair {a}, {b} (vertex {v} declared in both)")


def format_pgt(pgt: ParametricGraphTemplate) -> str:
    out = [f"pgt 1 {'directed' if pgt.directed else 'undirected'}"]
    for tid in pgt.tree.preorder():
        t = next(t for t in pgt.templates if t.id == tid)
        out.append(f"template {t.id} parent {t.parent or '-'} param {t.param}")
    for v, tid in pgt.vertex_template.items():
        out.append(f"vertex {v} in {tid}")
    for e in pgt.edges:
        out.append(f"edge {e.tail} {e.head}" + ("" if e.weight == 1 else f" w {format_weight(e.weight)}"))
    for e in pgt.sibling_edges:
        w = "" if e.weight == 1 else f" w {format_weight(e.weight)}"
        out.append(f"sedge {e.tail} {e.head}{w} delta {e.delta}")
    return "\n".join(out) + "\n"


def vertex_label(x) -> str:
    """Render an instantiated vertex as ``origin@i1.i2``."""
    if isinstance(x, tuple) and len(x) == 2 and isinstance(x[1], tuple):
        origin, addr = x
        return f"{origin}@" + ".".join(str(i) for _, i in addr)
    return str(x)


def format_instantiation(inst: Instantiation) -> str:
    out = [f"graph 1 {'directed' if inst.directed else 'undirected'}"]
    out += [f"vertex {vertex_label(x)}" for x in inst.vertices]
    out += [f"edge {vertex_label(a)} {vertex_label(b)} w {format_weight(w)}" for a, b, w in inst.edges]
    return "\n".join(out) + "\n"


def parse_graph(source) -> WeightedGraph:
    """Read the ``graph 1`` format: optional ``vertex`` lines, then edges."""
    text = _read(source)
    directed = None
    vertices: dict[str, None] = {}
    edges = []
    for lineno, toks in _lines(text):
        if directed is None:
            _header(lineno, toks, "graph")
            directed = _direction(lineno, toks[2]) if len(toks) > 2 else False
            continue
        if toks[0] == "vertex" and len(toks) == 2:
            vertices.setdefault(toks[1])
        elif toks[0] == "edge" and len(toks) >= 3:
            opts = _edge_tail(lineno, toks[3:])
            vertices.setdefault(toks[1])
            vertices.setdefault(toks[2])
            edges.append((toks[1], toks[2], as_weight(opts.get("w", 1))))
        else:
            raise FormatError(f"line {lineno}: unknown record {' '.join(toks)!r}")
    if directed is None:
        raise FormatError("empty graph file")
    return WeightedGraph(directed, tuple(vertices), tuple(edges))


def format_graph(graph: WeightedGraph, weights: bool = False) -> str:
    out = [f"graph 1 {'directed' if graph.directed else 'undirected'}"]
    out += [f"vertex {vertex_label(x)}" for x in graph.vertices]
    for a, b, w in graph.edges:
        suffix = f" w {format_weight(w)}" if weights else ""
        out.append(f"edge {vertex_label(a)} {vertex_label(b)}{suffix}")
    return "\n".join(out) + "\n"


def parse_tree(source):
    """Read a ``tree 1`` pattern file into a :class:`TreePattern`."""
    from .treematch import TreePattern

    text = _read(source)
    header = False
    nodes: list[str] = []
    parent: dict[str, str] = {}
    for lineno, toks in _lines(text):
        if not header:
            _header(lineno, toks, "tree")
            header = True
        elif toks[0] == "node" and len(toks) == 2:
            nodes.append(toks[1])
        elif toks[0] == "child" and len(toks) == 3:
            if toks[2] in parent:
                raise FormatError(f"line {lineno}: node {toks[2]} has two parents")
            parent[toks[2]] = toks[1]
            for n in toks[1:]:
                if n not in nodes:
                    nodes.append(n)
        else:
            raise FormatError(f"line {lineno}: unknown record {' '.join(toks)!r}")
    return TreePattern.from_parents(nodes, parent)


def parse_decomposition(source):
    from .instance_iso import TreeDecomposition

    text = _read(source)
    header = False
    bags: dict[str, frozenset] = {}
    links = []
    for lineno, toks in _lines(text):
        if not header:
            _header(lineno, toks, "td")
            header = True
        elif toks[0] == "bag" and len(toks) >= 2:
            bags[toks[1]] = frozenset(toks[2:])
        elif toks[0] == "link" and len(toks) == 3:
            links.append((toks[1], toks[2]))
        else:
            raise FormatError(f"line {lineno}: unknown record {' '.join(toks)!r}")
    return TreeDecomposition.from_links(bags, links)


def format_decomposition(dec) -> str:
    out = ["td 1"]
    for nid, bag in dec.bags.items():
        out.append(f"bag {nid} " + " ".join(sorted(map(str, bag))))
    for p, cs in dec.children.items():
        for c in cs:
            out.append(f"link {p} {c}")
    return "\n".join(out) + "\n"
