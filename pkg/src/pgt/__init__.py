"""Parametric graph templates: succinct nested graphs and algorithms that run on the template."""

from .core_model import (
    INF,
    BudgetExceeded,
    Edge,
    Instantiation,
    ModelError,
    ParametricGraphTemplate,
    SiblingEdge,
    Template,
    WeightedGraph,
    boundary_vertices,
    from_sets,
    instance_count,
    instantiate,
    is_acyclic,
    is_template_acyclic,
    template_of,
    validate,
)
from .discovery import DiscoveryConfig, canonical_form, discover, graph_isomorphic
from .formats import format_pgt, parse_graph, parse_pgt
from .instance_iso import instance_iso_decide, naive_instance_iso, tree_decomposition
from .maxflow import max_all_st_flow, max_single_st_flow
from .mincut import min_cut
from .siblings import (
    bfs_template,
    connected_components,
    reachable_instances,
    retemplate,
    sssp_template,
)
from .transforms import edge_reweight, instance_merge, upwards_partial_instantiation
from .treematch import TreePattern, disjoint_paths, match_tree

__version__ = "0.1.0"
