"""Seeded random models for property tests and the acceptance suite."""

from __future__ import annotations

import random

from .core_model import ParametricGraphTemplate, is_acyclic, is_template_acyclic


def random_template_tree(rng: random.Random, count: int, max_param: int, max_depth: int = 3, min_param: int = 1):
    """List of ``(id, parent, param)``; ``T0`` is the root."""
    out = [("T0", None, 1)]
    depth = {"T0": 0}
    for i in range(1, count):
        options = [t for t, d in depth.items() if d < max_depth]
        parent = rng.choice(options)
        tid = f"T{i}"
        depth[tid] = depth[parent] + 1
        out.append((tid, parent, rng.randint(min_param, max_param)))
    return out


def random_model(
    rng: random.Random,
    n: int = 6,
    m: int = 8,
    templates: int = 3,
    max_param: int = 3,
    directed: bool = True,
    max_weight: int = 1,
    max_depth: int = 3,
    min_param: int = 1,
    downward: float = 0.5,
) -> ParametricGraphTemplate:
    """Random no-skipping model with every template owning at least one vertex.

    ``downward`` is the probability that a directed cross-template edge points
    from the parent template into the child.
    """
    templates = max(1, min(templates, n))
    tlist = random_template_tree(rng, templates, max_param, max_depth, min_param)
    tids = [t for t, _, _ in tlist]
    parent = {t: p for t, p, _ in tlist}
    placement = {}
    for i in range(n):
        placement[f"v{i}"] = tids[i] if i < len(tids) else rng.choice(tids)
    verts = list(placement)
    pairs = []
    for u in verts:
        for v in verts:
            if u == v or (not directed and u > v):
                continue
            tu, tv = placement[u], placement[v]
            if tu == tv or parent.get(tv) == tu or parent.get(tu) == tv:
                pairs.append((u, v))
    edges = []
    for _ in range(m):
        if not pairs:
            break
        u, v = rng.choice(pairs)
        tu, tv = placement[u], placement[v]
        if directed and tu != tv:
            down = parent.get(tv) == tu
            if down != (rng.random() < downward):
                u, v = v, u
        edges.append((u, v, rng.randint(1, max_weight)))
    return ParametricGraphTemplate.build(directed, tlist, placement, edges)


def random_template_acyclic(rng: random.Random, tries: int = 200, **kw) -> ParametricGraphTemplate:
    """Directed model with no template-cycle (rejection sampling, mostly downward edges)."""
    kw.setdefault("downward", 0.85)
    for _ in range(tries):
        model = random_model(rng, directed=True, **kw)
        if is_template_acyclic(model):
            return model
    raise RuntimeError("could not sample a template-acyclic model")


def random_sibling_model(
    rng: random.Random,
    n: int = 5,
    m: int = 6,
    templates: int = 2,
    max_param: int = 8,
    siblings: int = 3,
    directed: bool = True,
    strongly_acyclic: bool = False,
    max_weight: int = 1,
    tries: int = 400,
) -> ParametricGraphTemplate:
    """Model with up to ``siblings`` sibling edges between vertices of one template."""
    for _ in range(tries):
        base = random_model(
            rng, n, m, templates, max_param, directed, max_weight=max_weight, downward=0.85, min_param=2
        )
        members = base.members
        candidates = [t for t, vs in members.items() if t != base.root and vs]
        sedges = []
        for _ in range(rng.randint(0, siblings)):
            if not candidates:
                break
            t = rng.choice(candidates)
            u, v = rng.choice(members[t]), rng.choice(members[t])
            sedges.append((u, v, rng.randint(1, base.params[t] - 1), rng.randint(1, max_weight)))
        model = ParametricGraphTemplate.build(
            directed,
            [(t.id, t.parent, t.param) for t in base.templates],
            dict(base.vertex_template),
            [(e.tail, e.head, e.weight) for e in base.edges],
            sedges,
        )
        if strongly_acyclic and not (is_acyclic(model) and is_template_acyclic(model)):
            continue
        return model
    raise RuntimeError("could not sample a sibling model")
