"""Multispecies-coalescent instances: species tree + gene tree + leaf mapping.

The validated unit of work is :class:`MSCInstance`.  Validation covers the
structural tree invariants, the per-species coverage requirement, the
population-size model, and the coalescent height condition: whenever two gene
leaves of different species coalesce at vertex v, v must be strictly above
the species divergence that separates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .trees import PhyloTree, as_fraction

CONSTANT = "constant"
LINEAR = "linear"

# relative tolerance for the continuous-linear sum rule
_LINEAR_RTOL = Fraction(1, 10**9)


@dataclass(frozen=True)
class PopulationSizes:
    """Per-branch effective population sizes, keyed by the branch's lower node.

    ``model`` is ``"constant"`` (piecewise constant: top == bottom) or
    ``"linear"`` (continuous linear: sizes interpolate along the branch and
    the bottom of an inner branch equals the sum of its child tops).
    """

    model: str
    top: dict[int, Fraction]
    bottom: dict[int, Fraction]

    def at(self, tree: PhyloTree, branch: int, h: Fraction) -> Fraction:
        """Population size of the branch below node ``branch``'s parent at height h."""
        lo, hi = self.bottom[branch], self.top[branch]
        if self.model == CONSTANT or lo == hi:
            return lo
        p = tree.parent(branch)
        h0 = tree.height(branch)
        h1 = tree.height(p) if p is not None else h0
        if h1 == h0:
            return lo
        t = (h - h0) / (h1 - h0)
        return lo + (hi - lo) * t


def uniform_populations(tree: PhyloTree, value=1, model: str = CONSTANT) -> PopulationSizes:
    v = as_fraction(value)
    ids = [i for i in range(len(tree.nodes)) if i != tree.root]
    if model == CONSTANT:
        return PopulationSizes(CONSTANT, {i: v for i in ids}, {i: v for i in ids})
    top = {i: v for i in ids}
    bottom = {}
    for i in ids:
        ch = tree.children(i)
        bottom[i] = sum((top[c] for c in ch), Fraction(0)) if ch else v
    return PopulationSizes(LINEAR, top, bottom)


@dataclass(frozen=True)
class MSCInstance:
    species: PhyloTree
    gene: PhyloTree
    phi: dict[int, int]  # gene leaf id -> species leaf id
    populations: PopulationSizes

    def species_of(self, gene_leaf: int) -> int:
        return self.phi[gene_leaf]

    def preimage(self, species_leaf: int) -> tuple[int, ...]:
        """Gene leaves mapped to a species leaf, in gene-tree order."""
        return tuple(g for g in self.gene.leaves() if self.phi[g] == species_leaf)


@dataclass(frozen=True)
class Violation:
    code: str
    node: int | None
    message: str

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class Embedding:
    """Leaf orders for the species tree and the gene tree."""

    species_order: tuple[int, ...]
    gene_order: tuple[int, ...]

    def mirrored(self) -> "Embedding":
        return Embedding(self.species_order[::-1], self.gene_order[::-1])


# -- species anchors and the extended mapping --------------------------------


def species_anchors(instance: MSCInstance) -> dict[int, int]:
    """For each gene vertex, the root of the minimal species subtree spanning
    the species of its clade (for a leaf: its own species)."""
    S, T = instance.species, instance.gene
    anchor: dict[int, int] = {}
    for v in T.postorder():
        ch = T.children(v)
        if not ch:
            anchor[v] = instance.phi[v]
        elif len(ch) == 1:
            anchor[v] = anchor[ch[0]]
        else:
            anchor[v] = S.lca(anchor[ch[0]], anchor[ch[1]])
    return anchor


def extend_phi(instance: MSCInstance) -> dict[int, int]:
    """Map each gene inner vertex to the species branch containing it.

    A branch is identified by its lower node; a vertex whose height equals a
    species node height exactly is assigned to the branch above that node
    (the coalescent condition is strict, so the vertex belongs with the
    ancestral side).  Requires a valid instance.
    """
    S, T = instance.species, instance.gene
    anchor = species_anchors(instance)
    phi_hat: dict[int, int] = {}
    for v in range(len(T.nodes)):
        if T.is_leaf(v):
            continue
        h = T.height(v)
        s = anchor[v]
        # walk up until the branch (s -> parent) contains h, ties go up; the
        # topmost branch absorbs every height at or above the species root
        while True:
            p = S.parent(s)
            if p is None or h < S.height(p) or S.parent(p) is None:
                break
            s = p
        phi_hat[v] = s
    return phi_hat


def minimal_species_subtree(instance: MSCInstance, v: int) -> int:
    """Root of the minimal rooted species subtree spanning the clade of v."""
    return species_anchors(instance)[v]


# -- validation ---------------------------------------------------------------


def _population_violations(instance: MSCInstance) -> list[Violation]:
    S, pops = instance.species, instance.populations
    bad: list[Violation] = []
    if pops.model not in (CONSTANT, LINEAR):
        return [Violation("pop-model", None, f"unknown population model {pops.model!r}")]
    for i in range(len(S.nodes)):
        if i == S.root:
            continue
        for d, name in ((pops.top, "top"), (pops.bottom, "bottom")):
            if i not in d:
                bad.append(Violation("pop-missing", i, f"branch below node {i} lacks {name} size"))
            elif d[i] <= 0:
                bad.append(Violation("pop-positive", i, f"{name} size of branch {i} not positive"))
    if bad or pops.model != LINEAR:
        return bad
    for i in range(len(S.nodes)):
        ch = S.children(i)
        if i == S.root or not ch:
            continue
        want = sum((pops.top[c] for c in ch), Fraction(0))
        got = pops.bottom[i]
        if abs(got - want) > _LINEAR_RTOL * max(abs(want), abs(got), Fraction(1)):
            bad.append(
                Violation(
                    "pop-linear-sum",
                    i,
                    f"linear model: bottom of branch {i} is {got}, child tops sum to {want}",
                )
            )
    return bad


def validate_msc(instance: MSCInstance) -> ValidationReport:
    """Check every instance invariant; violations are data, not failures."""
    S, T = instance.species, instance.gene
    bad: list[Violation] = []
    for msg in S.structural_violations():
        bad.append(Violation("species-structure", None, f"species tree: {msg}"))
    for msg in T.structural_violations():
        bad.append(Violation("gene-structure", None, f"gene tree: {msg}"))

    species_leaves = set()
    for i in range(len(S.nodes)):
        if S.is_leaf(i):
            species_leaves.add(i)
    gene_leaves = [v for v in range(len(T.nodes)) if T.is_leaf(v)]
    for g in gene_leaves:
        if g not in instance.phi:
            bad.append(Violation("phi-total", g, f"gene leaf {T.label(g)!r} unmapped"))
        elif instance.phi[g] not in species_leaves:
            bad.append(
                Violation("phi-range", g, f"gene leaf {T.label(g)!r} mapped to non-species node")
            )
    if bad:
        return ValidationReport(False, tuple(bad))

    mapped = {instance.phi[g] for g in gene_leaves}
    for s in sorted(species_leaves):
        if s not in mapped:
            bad.append(
                Violation(
                    "requirement-i", s, f"requirement (i): species {S.label(s)!r} has no gene leaf"
                )
            )

    bad.extend(_population_violations(instance))

    # coalescent height condition, per gene inner vertex: strictly above the
    # species divergence that separates its clade's species set
    anchor = species_anchors(instance)
    for v in range(len(T.nodes)):
        if T.is_leaf(v):
            continue
        s = anchor[v]
        if not S.is_leaf(s) and T.height(v) <= S.height(s):
            bad.append(
                Violation(
                    "msc-height",
                    v,
                    f"MSC height condition at vertex {v}: h={T.height(v)} "
                    f"not above species divergence {s} at h={S.height(s)}",
                )
            )
    return ValidationReport(not bad, tuple(bad))


# -- leaf-order requirements --------------------------------------------------


def validate_order(instance: MSCInstance, embedding: Embedding) -> bool:
    """Requirements (ii) and (iii) for a candidate pair of leaf orders."""
    S, T = instance.species, instance.gene
    if sorted(embedding.species_order) != sorted(S.leaves()):
        return False
    if sorted(embedding.gene_order) != sorted(T.leaves()):
        return False
    pos = {g: i for i, g in enumerate(embedding.gene_order)}

    # (ii): per-species blocks are contiguous and appear in species order
    lo: dict[int, int] = {}
    hi: dict[int, int] = {}
    cnt: dict[int, int] = {}
    for g, p in pos.items():
        s = instance.phi[g]
        lo[s] = min(lo.get(s, p), p)
        hi[s] = max(hi.get(s, p), p)
        cnt[s] = cnt.get(s, 0) + 1
    expect = 0
    for s in embedding.species_order:
        if s not in cnt:
            return False
        if lo[s] != expect or hi[s] != expect + cnt[s] - 1:
            return False
        expect += cnt[s]

    # (iii): every single-species clade is an interval of the gene order
    # (the interval property for all sub-clades is exactly rotation
    # realizability); computed bottom-up to stay linear
    anchor = species_anchors(instance)
    span: dict[int, tuple[int, int, int]] = {}
    for v in T.postorder():
        ch = T.children(v)
        if not ch:
            span[v] = (pos[v], pos[v], 1)
            continue
        los, his, ns = zip(*(span[c] for c in ch))
        span[v] = (min(los), max(his), sum(ns))
        a, b, n = span[v]
        if S.is_leaf(anchor[v]) and b - a + 1 != n:
            return False
    return True


def rotation_order(tree: PhyloTree, bits: dict[int, int] | None = None) -> tuple[int, ...]:
    """Leaf order induced by per-node rotation bits (1 swaps the children)."""
    bits = bits or {}
    out: list[int] = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        ch = tree.children(v)
        if not ch:
            out.append(v)
        elif len(ch) == 1:
            stack.append(ch[0])
        else:
            a, b = ch
            if bits.get(v, 0):
                a, b = b, a
            stack.append(b)
            stack.append(a)
    return tuple(out)


def species_order_realizable(tree: PhyloTree, order: tuple[int, ...]) -> bool:
    """True if the order arises from rotations (every clade is an interval)."""
    pos = {s: i for i, s in enumerate(order)}
    if len(pos) != len(tree.leaves()) or set(pos) != set(tree.leaves()):
        return False
    for v in range(len(tree.nodes)):
        if tree.is_leaf(v):
            continue
        ps = [pos[s] for s in tree.clade(v)]
        if max(ps) - min(ps) + 1 != len(ps):
            return False
    return True


def default_embedding(instance: MSCInstance) -> Embedding:
    """The embedding read off the stored child orders of both trees."""
    sorder = rotation_order(instance.species)
    return Embedding(sorder, gene_order_for(instance, sorder))


def gene_order_for(instance: MSCInstance, species_order: tuple[int, ...]) -> tuple[int, ...]:
    """A canonical valid gene order for a species order: per-species blocks,
    leaves of each block in stored gene-tree order."""
    by_species = {s: [] for s in species_order}
    for g in instance.gene.leaves():
        by_species[instance.phi[g]].append(g)
    out: list[int] = []
    for s in species_order:
        out.extend(by_species[s])
    return tuple(out)
