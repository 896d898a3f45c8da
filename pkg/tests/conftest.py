"""Shared fixtures: hand-built reference instances and random generators.

The two-species instance ``i1`` is used throughout:

  species   root(4) - split(2) - leaves A, B
  gene      root(4){ a2, u(3){ a1, b1 } },  a1,a2 -> A, b1 -> B

With gene order (a1, a2, b1) its drawing has exactly one crossing (the
connector of u against the vertical of a2); with (a2, a1, b1) none.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from coalview.trees import PhyloTree, build_tree, merge_gene_trees
from coalview.msc import (
    CONSTANT,
    Embedding,
    MSCInstance,
    PopulationSizes,
    uniform_populations,
)


def make_instance(species, gene, phi_labels, populations=None) -> MSCInstance:
    """phi_labels: gene leaf label -> species leaf label."""
    phi = {
        gene.node_by_label(g): species.node_by_label(s)
        for g, s in phi_labels.items()
    }
    pops = populations or uniform_populations(species)
    return MSCInstance(species, gene, phi, pops)


@pytest.fixture
def i1() -> MSCInstance:
    species = build_tree((4, (2, "A", "B")))
    gene = build_tree((4, "a2", (3, "a1", "b1")))
    return make_instance(species, gene, {"a1": "A", "a2": "A", "b1": "B"})


@pytest.fixture
def double_cherry() -> MSCInstance:
    """A:{x,w}, B:{y,z}; cherries (x,y) at 2 and (w,z) at 3; minimum is 1."""
    species = build_tree((5, (1, "A", "B")))
    gene = build_tree((4, (2, "x", "y"), (3, "w", "z")))
    return make_instance(species, gene, {"x": "A", "w": "A", "y": "B", "z": "B"})


def order(instance: MSCInstance, species_labels, gene_labels) -> Embedding:
    S, T = instance.species, instance.gene
    return Embedding(
        tuple(S.node_by_label(l) for l in species_labels),
        tuple(T.node_by_label(l) for l in gene_labels),
    )


# -- random instance generation ----------------------------------------------


def random_species_tree(rng: random.Random, n: int) -> PhyloTree:
    """Random shaped species tree on n leaves, integer node heights, with an
    out-degree-1 root."""
    labels = [f"S{i}" for i in range(n)]
    items = [(l,) for l in labels]  # build_tree specs
    h = 0
    while len(items) > 1:
        h += 1
        i = rng.randrange(len(items) - 1)
        a = items.pop(i)
        b = items.pop(i)
        items.insert(i, (h, a[0] if len(a) == 1 else a, b[0] if len(b) == 1 else b))
    spec = items[0]
    if len(spec) == 1:
        spec = (1, spec[0])
    else:
        spec = (h + 1, spec)
    return build_tree(spec)


def random_instance(
    rng: random.Random, n_species: int, n_gene: int, model: str = CONSTANT
) -> MSCInstance:
    """Random valid instance: a coalescent-style gene tree whose merges
    always happen above the relevant species divergence.  Gene heights get a
    fractional offset so they never collide with species node heights."""
    species = random_species_tree(rng, n_species)
    sleaves = list(species.leaves())
    # each species gets at least one gene leaf
    homes = list(sleaves)
    for _ in range(n_gene - n_species):
        homes.append(rng.choice(sleaves))
    rng.shuffle(homes)
    gene_specs = []
    anchors = []  # species node each lineage currently spans
    phi_labels = {}
    for i, s in enumerate(homes):
        lbl = f"g{i}"
        gene_specs.append(lbl)
        anchors.append(s)
        phi_labels[lbl] = species.label(s)
    while len(gene_specs) > 1:
        i = rng.randrange(len(gene_specs) - 1)
        j = i + rng.randrange(1, len(gene_specs) - i)
        a = species.lca(anchors[i], anchors[j])
        floor = max(
            species.height(a),
            _spec_height(gene_specs[i]),
            _spec_height(gene_specs[j]),
        )
        h = _half_above(floor) + rng.randrange(0, 2)
        merged = (h, gene_specs[i], gene_specs[j])
        anchors[i] = a
        gene_specs[i] = merged
        del gene_specs[j], anchors[j]
    spec = gene_specs[0]
    if isinstance(spec, str):
        spec = (Fraction(1, 2), spec)
    else:
        spec = (_spec_height(spec) + 1, spec)
    gene = build_tree(spec)
    pops = _random_populations(rng, species, model)
    return make_instance(species, gene, phi_labels, pops)


def _spec_height(s) -> Fraction:
    return Fraction(0) if isinstance(s, str) else Fraction(s[0])


def _half_above(h: Fraction) -> Fraction:
    """Smallest half-integer strictly above h; keeps random gene heights off
    the integer species node heights."""
    k = h.__floor__()
    cand = Fraction(2 * k + 1, 2)
    return cand if cand > h else cand + 1


def _random_populations(rng, species, model) -> PopulationSizes:
    ids = [i for i in range(len(species.nodes)) if i != species.root]
    if model == CONSTANT:
        vals = {i: Fraction(rng.randrange(1, 9)) for i in ids}
        return PopulationSizes(CONSTANT, dict(vals), dict(vals))
    top = {i: Fraction(rng.randrange(1, 9)) for i in ids}
    bottom = {}
    for i in ids:
        ch = species.children(i)
        if ch:
            bottom[i] = sum((top[c] for c in ch), Fraction(0))
        else:
            bottom[i] = Fraction(rng.randrange(1, 9))
    return PopulationSizes("linear", top, bottom)


def random_planar_instance(rng: random.Random, n_species: int, n_gene: int):
    """Instance built from a crossing-free drawing: only adjacent lineages
    ever merge, so the constructing species order admits zero crossings.
    Returns (instance, species_order, gene_order) of that drawing."""
    species = random_species_tree(rng, n_species)
    sorder = []

    def collect(v):
        ch = species.children(v)
        if not ch:
            sorder.append(v)
        for c in ch:
            collect(c)

    collect(species.root)
    homes = list(sorder)
    for _ in range(n_gene - n_species):
        homes.append(rng.choice(sorder))
    srank = {s: k for k, s in enumerate(sorder)}
    homes.sort(key=lambda s: srank[s])
    lineages = []
    phi_labels = {}
    for i, s in enumerate(homes):
        lbl = f"g{i}"
        lineages.append((lbl, s))
        phi_labels[lbl] = species.label(s)
    gene_leaf_order = [l for l, _ in lineages]
    specs = {l: l for l, _ in lineages}
    anchors = {l: s for l, s in lineages}
    heights = {l: Fraction(0) for l, _ in lineages}
    names = [l for l, _ in lineages]
    while len(names) > 1:
        i = rng.randrange(len(names) - 1)
        a, b = names[i], names[i + 1]
        anc = species.lca(anchors[a], anchors[b])
        h = _half_above(
            max(species.height(anc), heights[a], heights[b])
        ) + rng.randrange(0, 2)
        key = a + "+" + b
        specs[key] = (h, specs[a], specs[b])
        anchors[key] = anc
        heights[key] = h
        names[i] = key
        del names[i + 1]
    spec = specs[names[0]]
    spec = (heights[names[0]] + 1, spec)
    gene = build_tree(spec)
    inst = make_instance(species, gene, phi_labels)
    emb = Embedding(
        tuple(sorder), tuple(gene.node_by_label(l) for l in gene_leaf_order)
    )
    return inst, emb


def concordant_instance(rng: random.Random, n_species: int) -> MSCInstance:
    """Gene tree with the same topology as the species tree, one leaf per
    species, every divergence slightly above its species counterpart."""
    species = random_species_tree(rng, n_species)

    def rec(v):
        ch = species.children(v)
        if not ch:
            return "g_" + species.label(v)
        sub = tuple(rec(c) for c in ch)
        return (species.height(v) + Fraction(1, 3),) + sub

    gene = build_tree(rec(species.root))
    phi = {
        "g_" + species.label(s): species.label(s) for s in species.leaves()
    }
    return make_instance(species, gene, phi)
