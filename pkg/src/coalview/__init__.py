"""Lay out multispecies-coalescent gene trees inside species trees and
minimize gene-tree edge crossings (greedy heuristics, branch and bound, and
a solver-agnostic integer model), decide planar instances, and generate
Max-Cut hardness gadget instances for testing."""

from .trees import PhyloTree, Node, build_tree, merge_gene_trees, with_unary_root
from .msc import (
    MSCInstance,
    PopulationSizes,
    Embedding,
    ValidationReport,
    validate_msc,
    validate_order,
    extend_phi,
    minimal_species_subtree,
    default_embedding,
    uniform_populations,
)
from .layout import (
    Layout,
    CrossingReport,
    count_crossings,
    count_crossings_geometric,
    layout_rectangular,
    layout_proportional,
)

__all__ = [
    "PhyloTree",
    "Node",
    "build_tree",
    "merge_gene_trees",
    "with_unary_root",
    "MSCInstance",
    "PopulationSizes",
    "Embedding",
    "ValidationReport",
    "validate_msc",
    "validate_order",
    "extend_phi",
    "minimal_species_subtree",
    "default_embedding",
    "uniform_populations",
    "Layout",
    "CrossingReport",
    "count_crossings",
    "count_crossings_geometric",
    "layout_rectangular",
    "layout_proportional",
]

__version__ = "0.1.0"
