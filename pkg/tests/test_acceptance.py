"""End-to-end acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import random
import time
from collections import Counter
from contextlib import contextmanager

import pytest

import pgt
from pgt.core_model import BudgetExceeded, ParametricGraphTemplate, instantiate
from pgt.discovery import DiscoveryConfig, boundary_bound, discover, graph_isomorphic, relabel
from pgt.formats import parse_graph
from pgt.generators import random_model, random_sibling_model, random_template_acyclic
from pgt.instance_iso import DEFAULT_STATE_LIMIT, instance_iso_decide, naive_instance_iso, tree_decomposition
from pgt.maxflow import max_all_st_flow, max_single_st_flow
from pgt.mincut import min_cut, witness_instances
from pgt.oracles import (
    check_embedding,
    check_paths,
    cut_value_of_side,
    oracle_components,
    oracle_disjoint_paths,
    oracle_distances,
    oracle_flow,
    oracle_mincut,
    oracle_reachable,
    oracle_tree_occurs,
    zero_address,
)
from pgt.siblings import bfs_template, connected_components, reachable_instances, retemplate, sssp_template
from pgt.treematch import TreePattern, disjoint_paths, match_tree

from conftest import DATA, graph, iso_model, loop, perturb, same_graph

REPORT: dict[int, str] = {}


@contextmanager
def criterion(number, title):
    info = {}
    try:
        yield info
    except BaseException:
        REPORT[number] = f"criterion {number:2d} FAIL  {title}"
        raise
    detail = ", ".join(f"{k} {v}" for k, v in info.items())
    REPORT[number] = f"criterion {number:2d} PASS  {title}" + (f" ({detail})" if detail else "")


def _random_pattern(rng, k):
    nodes = [f"a{i}" for i in range(k)]
    return TreePattern.from_parents(nodes, {nodes[i]: nodes[rng.randrange(i)] for i in range(1, k)})


def test_criterion_01_fig1_fixture(fig1):
    with criterion(1, "fig1 fixture instantiation") as info:
        start = time.perf_counter()
        inst = instantiate(fig1)
        elapsed = time.perf_counter() - start
        assert len(inst.vertices) == 16
        assert inst.multiplicities() == {"a": 1, "b": 2, "c": 2, "d": 2, "e": 6, "f": 1, "g": 1, "i": 1}
        assert elapsed < 1
        info["seconds"] = f"{elapsed:.3f}"


def test_criterion_02_flow_suite():
    with criterion(2, "flow oracle suite") as info:
        rng = random.Random(2)
        start = time.perf_counter()
        for _ in range(200):
            m = random_model(rng, n=rng.randint(2, 8), m=rng.randint(1, 14), templates=rng.randint(1, 4), max_param=3, directed=True, max_weight=4)
            s, t = rng.sample(m.vertices, 2)
            inst = instantiate(m)
            r = max_all_st_flow(m, s, t)
            assert r.value == oracle_flow(inst, inst.instances(s), inst.instances(t)) == r.cut_value()
            a, b = rng.choice(inst.instances(s)), rng.choice(inst.instances(t))
            r = max_single_st_flow(m, s, a[1], t, b[1])
            assert r.value == oracle_flow(inst, [a], [b]) == r.cut_value()
        elapsed = time.perf_counter() - start
        assert elapsed < 60
        info["models"] = 200
        info["seconds"] = f"{elapsed:.1f}"


def test_criterion_03_cut_suite():
    with criterion(3, "cut oracle suite with witnesses") as info:
        rng = random.Random(3)
        start = time.perf_counter()
        for _ in range(200):
            m = random_model(rng, n=rng.randint(2, 8), m=rng.randint(1, 14), templates=rng.randint(1, 4), max_param=3, directed=False, max_weight=4)
            inst = instantiate(m)
            r = min_cut(m)
            assert r.value == oracle_mincut(inst)
            side = witness_instances(m, r, inst)
            assert 0 < len(side) < len(inst.vertices)
            assert cut_value_of_side(inst, side) == r.value
        elapsed = time.perf_counter() - start
        assert elapsed < 120
        info["models"] = 200
        info["seconds"] = f"{elapsed:.1f}"


@pytest.fixture(scope="module")
def treematch_runs():
    """Seeded tree-matching runs with default trials and their oracle answers."""
    rng = random.Random(4)
    runs = []
    positives = 0
    while positives < 220 or len(runs) < 150:
        m = random_template_acyclic(rng, n=rng.randint(2, 6), m=rng.randint(2, 9), templates=rng.randint(1, 4), max_param=3)
        pattern = _random_pattern(rng, rng.randint(1, 4))
        inst = instantiate(m)
        report = match_tree(m, pattern, seed=len(runs))
        truth = {x: oracle_tree_occurs(inst, pattern, x) for x in m.vertices}
        positives += sum(truth.values())
        runs.append((m, pattern, inst, report, truth))
    return runs


def test_criterion_04_treematch_safety(treematch_runs):
    with criterion(4, "tree-match safety") as info:
        certified = 0
        for m, pattern, inst, report, truth in treematch_runs:
            for x, hit in report.per_root.items():
                if hit:
                    assert check_embedding(inst, pattern, report.witnesses[x], x)
                    assert truth[x]
                    certified += 1
        info["certified roots"] = certified


def test_criterion_05_treematch_completeness(treematch_runs):
    with criterion(5, "tree-match completeness") as info:
        positives = detected = 0
        for m, pattern, inst, report, truth in treematch_runs:
            assert report.mapping_count <= m.tree.height * 3 ** (pattern.k - 1)
            for x, want in truth.items():
                if want:
                    positives += 1
                    detected += report.per_root[x]
        assert positives >= 200
        assert detected == positives
        info["detected"] = f"{detected}/{positives}"


def test_criterion_06_disjoint_paths():
    with criterion(6, "disjoint-paths suite") as info:
        rng = random.Random(6)
        tally = Counter()
        while sum(tally.values()) < 100:
            m = random_template_acyclic(rng, n=rng.randint(3, 7), m=rng.randint(3, 11), templates=rng.randint(2, 4), max_param=2)
            s, t = rng.sample(m.vertices, 2)
            k = rng.randint(1, 3)
            length = rng.randint(1, 8 // k)
            mode = rng.choice(["exactly", "at_most"])
            inst = instantiate(m)
            src = (s, zero_address(m, s))
            want = oracle_disjoint_paths(inst, src, inst.instances(t), k, length, mode)
            # keep the suite from being dominated by unreachable pairs
            if not want and tally[False] >= 60:
                continue
            r = disjoint_paths(m, s, t, k, length, mode, seed=sum(tally.values()))
            assert r.found == want
            if r.found:
                assert check_paths(inst, r.paths, src, inst.instances(t), k, length, mode)
            tally[want] += 1
        info["positive"] = tally[True]
        info["negative"] = tally[False]


def _tree_ok(part, m, s, weighted):
    g = instantiate(m)
    arcs = Counter((u, v) for u, v, _ in g.edges)
    src = (s, zero_address(m, s))
    h = instantiate(part.model)
    back = {x: part.map_instance(*x) for x in h.vertices}
    if len(set(back.values())) != len(back) or set(back.values()) != oracle_reachable(g, src):
        return False
    parent = {}
    for a, b, w in h.edges:
        if b in parent or (back[a], back[b]) not in arcs:
            return False
        parent[b] = (a, w if weighted else 1)
    if len(parent) != len(h.vertices) - 1:
        return False
    plain = g if weighted else type(g)(g.directed, g.vertices, tuple((a, b, 1) for a, b, _ in g.edges))
    want = oracle_distances(plain, src)
    depth = {}

    def dist(x):
        if x not in depth:
            depth[x] = 0 if x not in parent else dist(parent[x][0]) + parent[x][1]
        return depth[x]

    return all(dist(x) == want[back[x]] for x in h.vertices)


def _residues_from_oracle(m, tid, v, g):
    prefix = zero_address(m, v)[:-1]
    reach = oracle_reachable(g, (v, zero_address(m, v)))
    out = {}
    for u, addr in reach:
        if m.vertex_template[u] == tid and addr[:-1] == prefix:
            out.setdefault(u, set()).add(addr[-1][1])
    return out


def test_criterion_07_siblings():
    with criterion(7, "siblings suite") as info:
        rng = random.Random(7)
        checked = Counter()
        while checked["models"] < 100:
            m = random_sibling_model(rng, n=rng.randint(2, 6), m=rng.randint(1, 8), templates=rng.randint(2, 4), max_param=8, siblings=3, directed=True, strongly_acyclic=True, max_weight=3)
            if m.total_instances() > 3000 or not m.sibling_edges:
                continue
            g = instantiate(m)
            for v in m.vertices:
                tid = m.template_of(v)
                if tid != m.root:
                    assert reachable_instances(m, tid, v) == _residues_from_oracle(m, tid, v, g)
                assert _tree_ok(bfs_template(m, v), m, v, weighted=False)
                assert _tree_ok(sssp_template(m, v), m, v, weighted=True)
            checked["models"] += 1
            checked["sibling edges"] += len(m.sibling_edges)
        while checked["component models"] < 100:
            m = random_sibling_model(rng, n=rng.randint(1, 6), m=rng.randint(0, 7), templates=rng.randint(1, 4), max_param=8, siblings=3, directed=False)
            if m.total_instances() > 3000:
                continue
            assert connected_components(m) == oracle_components(instantiate(m))
            checked["component models"] += 1
        for param in range(2, 7):
            for sibs in ([("u", "v", 1)], [("u", "v", 1), ("v", "w", 2), ("w", "u", 2)]):
                names = sorted({x for e in sibs for x in e[:2]})
                m = ParametricGraphTemplate.build(False, [("T0", None, 1), ("T1", "T0", param)], {x: "T1" for x in names}, [], sibs)
                assert same_graph(instantiate(m), instantiate(retemplate(m, "T1")))
                checked["retemplate"] += 1
        assert connected_components(loop(4, 2, directed=False)) == 2
        info.update(checked)


def test_criterion_08_discovery():
    with criterion(8, "discovery round trip") as info:
        rng = random.Random(8)
        done = 0
        while done < 50:
            m = random_model(rng, n=rng.randint(2, 6), m=rng.randint(1, 8), templates=rng.randint(1, 3), max_param=3, directed=False, min_param=2)
            g = relabel(instantiate(m))
            if oracle_components(g) != 1:
                continue
            found = discover(g, DiscoveryConfig(beta_max=boundary_bound(m)))
            assert any(graph_isomorphic(relabel(instantiate(x)), g) for x in found)
            done += 1
        (k12,) = discover(graph([("r", "a"), ("r", "b")]), DiscoveryConfig(beta_max=1))
        assert sorted(t.param for t in k12.templates) == [1, 2]
        (tri,) = discover(parse_graph(DATA / "tri.el"), DiscoveryConfig(beta_max=1))
        assert sorted(t.param for t in tri.templates) == [1, 3]
        info["models"] = done


def test_criterion_09_instance_iso():
    with criterion(9, "instance isomorphism suite") as info:
        rng = random.Random(9)
        tally = Counter()
        peak = 0
        while tally["positive"] < 50 or tally["negative"] < 50:
            m = iso_model(rng)
            g = relabel(instantiate(m))
            want_positive = tally["positive"] < 50 and (tally["negative"] >= 50 or rng.random() < 0.5)
            if not want_positive:
                g = perturb(rng, g, rng.choice(["add", "remove", "swap"]))
                if g is None or not g.edges:
                    continue
            if tree_decomposition(g).width > 3:
                continue
            truth = naive_instance_iso(m, g)
            if truth != want_positive:
                continue
            stats = {}
            assert instance_iso_decide(m, g, stats=stats) == truth
            peak = max([peak, *stats.values()])
            tally["positive" if truth else "negative"] += 1
        assert peak <= DEFAULT_STATE_LIMIT
        info.update(tally)
        info["peak states"] = peak


def test_criterion_10_scale(monkeypatch):
    with criterion(10, "scale smoke test") as info:
        levels = [("T0", None, 1), ("T1", "T0", 1000), ("T2", "T1", 100), ("T3", "T2", 100)]
        where = {"s": "T0", "t": "T0", "a": "T1", "b": "T2", "c": "T3"}
        edges = [("s", "a", 5), ("a", "t", 3), ("a", "b", 1), ("b", "c", 1)]
        directed = ParametricGraphTemplate.build(True, levels, where, edges)
        undirected = ParametricGraphTemplate.build(False, levels, where, edges)
        assert directed.total_instances() == 2 + 1000 + 100_000 + 10_000_000

        def refuse(*args, **kwargs):
            raise AssertionError("instantiation attempted")

        for module in (pgt.core_model, pgt.maxflow, pgt.mincut, pgt.siblings, pgt.transforms):
            if hasattr(module, "instantiate"):
                monkeypatch.setattr(module, "instantiate", refuse)
        timings = {}
        for name, call, want in (
            ("flow", lambda: max_all_st_flow(directed, "s", "t").value, 3000),
            ("cut", lambda: min_cut(undirected).value, 1),
            ("components", lambda: connected_components(undirected), 1),
        ):
            start = time.perf_counter()
            assert call() == want
            timings[name] = time.perf_counter() - start
            assert timings[name] < 1
        monkeypatch.undo()
        with pytest.raises(BudgetExceeded):
            instantiate(undirected)
        info.update({k: f"{v * 1000:.0f}ms" for k, v in timings.items()})
