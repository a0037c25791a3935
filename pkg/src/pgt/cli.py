"""Command-line entry point: ``pgt <command> [options] FILE``.

Exit codes: 0 success, 1 domain error (or an ``--oracle`` disagreement),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from pathlib import Path

from . import oracles, siblings
from .core_model import ModelError, instantiate, validate
from .discovery import DiscoveryConfig, discover, relabel
from .formats import (
    format_instantiation,
    format_pgt,
    format_weight,
    parse_decomposition,
    parse_graph,
    parse_pgt,
    parse_tree,
    vertex_label,
)
from .instance_iso import instance_iso_decide, naive_instance_iso
from .maxflow import max_all_st_flow, max_single_st_flow
from .mincut import min_cut, witness_instances
from .transforms import normalize_address
from .treematch import disjoint_paths, match_tree


class Disagreement(ModelError):
    """An ``--oracle`` run found the template answer and the brute-force answer differ."""


class Output:
    """Collects records and renders them as text lines or JSON lines."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.records: list[tuple[str, object]] = []

    def put(self, key: str, value) -> None:
        self.records.append((key, value))

    def render(self) -> str:
        lines = []
        for key, value in self.records:
            if self.fmt == "json-lines":
                lines.append(json.dumps({key: value}, sort_keys=True))
            elif key == "text":
                lines.append(str(value).rstrip("\n"))
            elif isinstance(value, (list, tuple)):
                lines.append(f"{key} " + " ".join(map(str, value)))
            else:
                lines.append(f"{key} {value}")
        return "\n".join(lines) + ("\n" if lines else "")


def _split_vertex(text: str):
    name, _, addr = text.partition("@")
    if not addr:
        return name, None
    try:
        return name, tuple(int(i) for i in addr.split("."))
    except ValueError:
        raise ModelError(f"bad instance address {text!r}; expected name@i1.i2") from None


def _instance(pgt, name, addr):
    idx = normalize_address(pgt, name, addr)
    return name, tuple(idx.items())


def _compare(out: Output, mine, theirs, render=str) -> None:
    out.put("oracle", render(theirs))
    agree = mine == theirs
    out.put("agree", "yes" if agree else "no")
    if not agree:
        raise Disagreement(f"template answer {render(mine)} differs from oracle answer {render(theirs)}")


def _load(path: str):
    pgt = parse_pgt(Path(path))
    report = validate(pgt)
    if not report.ok:
        raise ModelError("; ".join(report.violations))
    return pgt


def cmd_validate(args, out):
    pgt = parse_pgt(Path(args.file))
    report = validate(pgt)
    if not report.ok:
        raise ModelError("; ".join(report.violations))
    out.put("valid", "yes")
    out.put("templates", len(pgt.templates))
    out.put("vertices", len(pgt.vertices))
    out.put("instances", pgt.total_instances())


def cmd_instantiate(args, out):
    pgt = _load(args.file)
    inst = instantiate(pgt, args.budget)
    if out.fmt == "json-lines":
        for x in inst.vertices:
            out.put("vertex", vertex_label(x))
        for a, b, w in inst.edges:
            out.put("edge", [vertex_label(a), vertex_label(b), format_weight(w)])
    else:
        out.put("text", format_instantiation(inst))
    if args.oracle:
        _compare(out, len(inst.vertices), len(oracles.rewrite_instantiate(pgt).vertices))


def cmd_flow(args, out):
    pgt = _load(args.file)
    s, s_addr = _split_vertex(args.source)
    t, t_addr = _split_vertex(args.sink)
    if args.mode == "all":
        if s_addr is not None or t_addr is not None:
            raise ModelError("--mode all takes plain vertex names")
        res = max_all_st_flow(pgt, s, t)
    else:
        res = max_single_st_flow(pgt, s, s_addr, t, t_addr)
    out.put("value", format_weight(res.value))
    out.put("cut", sorted(map(str, res.source_side)))
    if args.oracle:
        inst = instantiate(pgt, args.budget)
        if args.mode == "all":
            sources = [x for x in inst.vertices if x[0] == s]
            sinks = [x for x in inst.vertices if x[0] == t]
        else:
            sources, sinks = [_instance(pgt, s, s_addr)], [_instance(pgt, t, t_addr)]
        _compare(out, res.value, oracles.oracle_flow(inst, sources, sinks), format_weight)


def cmd_mincut(args, out):
    pgt = _load(args.file)
    res = min_cut(pgt)
    out.put("value", format_weight(res.value))
    out.put("case", res.case_tag)
    out.put("side", res.describe())
    if args.oracle:
        inst = instantiate(pgt, args.budget)
        side = witness_instances(pgt, res, inst)
        if res.case_tag != "disconnected":
            out.put("witness", format_weight(oracles.cut_value_of_side(inst, side)))
        _compare(out, res.value, oracles.oracle_mincut(inst), format_weight)


def cmd_match_tree(args, out):
    pgt = _load(args.file)
    pattern = parse_tree(Path(args.pattern))
    report = match_tree(pgt, pattern, trials=args.trials, seed=args.seed)
    out.put("found", str(report.found).lower())
    for v in sorted(report.per_root):
        out.put("root", [v, str(report.per_root[v]).lower()])
    if args.certify or args.oracle:
        inst = instantiate(pgt, args.budget)
        for v, emb in sorted(report.witnesses.items()):
            if not oracles.check_embedding(inst, pattern, emb, v):
                raise Disagreement(f"witness for root {v} does not embed into the instantiation")
            pairs = [f"{a}={vertex_label(emb[a])}" for a in pattern.preorder()]
            out.put("witness", [v] + pairs)
        out.put("certified", "yes")
    if args.oracle:
        inst = instantiate(pgt, args.budget)
        truth = {v: oracles.oracle_tree_occurs(inst, pattern, v) for v in report.per_root}
        out.put("oracle", [v for v in sorted(truth) if truth[v]])
        missed = [v for v in truth if truth[v] and not report.per_root[v]]
        wrong = [v for v in truth if report.per_root[v] and not truth[v]]
        out.put("agree", "yes" if not missed and not wrong else "no")
        if missed or wrong:
            raise Disagreement(f"roots found only by the oracle: {missed}; only by the template search: {wrong}")


def cmd_disjoint_paths(args, out):
    pgt = _load(args.file)
    mode = {"exact": "exactly", "atmost": "at_most"}[args.mode]
    rep = disjoint_paths(pgt, args.source, args.sink, args.k, args.L, mode, trials=args.trials, seed=args.seed)
    out.put("found", str(rep.found).lower())
    for p in rep.paths:
        out.put("path", [vertex_label(x) for x in p])
    if args.oracle:
        inst = instantiate(pgt, args.budget)
        src = (args.source, oracles.zero_address(pgt, args.source))
        sinks = [x for x in inst.vertices if x[0] == args.sink]
        if rep.found and not oracles.check_paths(inst, rep.paths, src, sinks, args.k, args.L, mode):
            raise Disagreement("reported paths do not check out on the instantiation")
        truth = oracles.oracle_disjoint_paths(inst, src, sinks, args.k, args.L, mode)
        _compare(out, rep.found, truth, lambda b: str(b).lower())


def _tree_command(args, out, fn, weighted):
    pgt = _load(args.file)
    res = fn(pgt, args.root)
    out.put("text", format_pgt(res.model))
    for v in sorted(res.distance, key=str):
        out.put("distance", [v, format_weight(res.distance[v])])
    if args.oracle:
        inst = instantiate(pgt, args.budget)
        tree = instantiate(res.model, args.budget)
        src = (args.root, oracles.zero_address(pgt, args.root))
        graph = inst if weighted else type(inst)(inst.directed, inst.vertices, tuple((a, b, 1) for a, b, _ in inst.edges))
        truth = oracles.oracle_distances(graph, src)
        depth = oracles.oracle_distances(type(tree)(True, tree.vertices, tuple((a, b, w if weighted else 1) for a, b, w in tree.edges)), (res.source, ()))
        mapped = {res.map_instance(*x): depth.get(x) for x in tree.vertices}
        indeg = Counter(b for _, b, _ in tree.edges)
        ok = mapped == truth and all(c == 1 for c in indeg.values())
        out.put("oracle", f"{len(truth)} reachable")
        out.put("agree", "yes" if ok else "no")
        if not ok:
            raise Disagreement("search template does not reproduce the oracle distances")


def cmd_bfs(args, out):
    _tree_command(args, out, siblings.bfs_template, weighted=False)


def cmd_sssp(args, out):
    _tree_command(args, out, siblings.sssp_template, weighted=True)


def cmd_components(args, out):
    pgt = _load(args.file)
    count = siblings.connected_components(pgt)
    out.put("components", count)
    if args.oracle:
        _compare(out, count, oracles.oracle_components(instantiate(pgt, args.budget)))


def cmd_retemplate(args, out):
    pgt = _load(args.file)
    new = siblings.retemplate(pgt, args.template)
    out.put("text", format_pgt(new))
    if args.oracle:
        shift = siblings.retemplate_shift(pgt, args.template)
        p = pgt.params[args.template]

        def move(x):
            v, addr = x
            if pgt.vertex_template[v] != args.template or not addr:
                return x
            return v, addr[:-1] + ((args.template, (addr[-1][1] + shift[v]) % p),)

        def arcs(inst, f=lambda x: x):
            keys = [(f(a), f(b)) for a, b, _ in inst.edges]
            return Counter(k if inst.directed else frozenset(k) for k in keys)

        same = arcs(instantiate(pgt, args.budget), move) == arcs(instantiate(new, args.budget))
        out.put("oracle", "isomorphic" if same else "different")
        out.put("agree", "yes" if same else "no")
        if not same:
            raise Disagreement("retemplated model does not instantiate to the same graph")


def cmd_discover(args, out):
    graph = parse_graph(Path(args.file))
    models = discover(graph, DiscoveryConfig(beta_max=args.beta_max, mode=args.mode))
    for model in models:
        out.put("text" if out.fmt == "text" else "model", format_pgt(model))
    if out.fmt == "text":
        out.put("text", f"# models {len(models)}")
    else:
        out.put("models", len(models))
    if args.oracle:
        ok = all(naive_instance_iso(m, relabel(graph), args.budget) for m in models)
        out.put("oracle", "round-trip" if ok else "mismatch")
        out.put("agree", "yes" if ok else "no")
        if not ok:
            raise Disagreement("a discovered model does not instantiate to the input")


def cmd_iso(args, out):
    pgt = _load(args.template)
    target = parse_graph(Path(args.target))
    if args.naive:
        answer = naive_instance_iso(pgt, target, args.budget)
    else:
        dec = parse_decomposition(Path(args.decomposition)) if args.decomposition else None
        answer = instance_iso_decide(pgt, target, dec)
    out.put("isomorphic", str(answer).lower())
    if args.oracle:
        _compare(out, answer, naive_instance_iso(pgt, target, args.budget), lambda b: str(b).lower())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--oracle", action="store_true", help="also answer on the explicit instantiation and compare")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized searches")
    common.add_argument("--format", choices=["text", "json-lines"], default="text")
    common.add_argument("--budget", type=int, default=None, help="instantiation vertex cap (default: PGT_BUDGET or 10^7)")
    common.add_argument("--output", default=None, help="write results to this file instead of stdout")

    parser = argparse.ArgumentParser(prog="pgt", description="Algorithms on parametric graph templates.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, file_help="model file (.pgt)"):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        if file_help:
            p.add_argument("file", help=file_help)
        return p

    add("validate", cmd_validate, "check a model file")
    add("instantiate", cmd_instantiate, "print the explicit instantiation")
    p = add("flow", cmd_flow, "maximum s-t flow")
    p.add_argument("--mode", choices=["all", "single"], default="all")
    p.add_argument("--source", required=True, help="vertex, or vertex@i1.i2 for --mode single")
    p.add_argument("--sink", required=True)
    add("mincut", cmd_mincut, "global minimum cut of an undirected model")
    p = add("match-tree", cmd_match_tree, "find a tree pattern by color coding")
    p.add_argument("--pattern", required=True, help="pattern file (.tree)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--certify", action="store_true", help="check every witness on the instantiation")
    p = add("disjoint-paths", cmd_disjoint_paths, "k internally disjoint s-t paths of bounded length")
    p.add_argument("--source", required=True)
    p.add_argument("--sink", required=True)
    p.add_argument("-k", type=int, required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--mode", choices=["exact", "atmost"], default="exact")
    p.add_argument("--trials", type=int, default=None)
    for name, fn in (("bfs", cmd_bfs), ("sssp", cmd_sssp)):
        p = add(name, fn, f"{name.upper()} arborescence as a template")
        p.add_argument("--root", required=True)
    add("components", cmd_components, "count connected components of the instantiation")
    p = add("retemplate", cmd_retemplate, "move sibling shifts off a spanning tree")
    p.add_argument("--template", required=True)
    p = add("discover", cmd_discover, "find models that instantiate to a graph", "graph file (.el)")
    p.add_argument("--beta-max", type=int, default=1)
    p.add_argument("--mode", choices=["first", "all"], default="first")
    p = add("iso", cmd_iso, "is a graph the instantiation of a model?", None)
    p.add_argument("--template", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--decomposition", default=None)
    p.add_argument("--naive", action="store_true")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.budget is None and os.environ.get("PGT_BUDGET"):
        args.budget = int(os.environ["PGT_BUDGET"])
    out = Output(args.format)
    try:
        args.func(args, out)
    except Disagreement as exc:
        stdout.write(out.render())
        stderr.write(f"pgt: oracle disagreement: {exc}\n")
        return 1
    except (ModelError, OSError) as exc:
        stderr.write(f"pgt: error: {exc}\n")
        return 1
    text = out.render()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
