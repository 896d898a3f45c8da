"""Rooted binary trees with per-node heights.

One shared shape for species trees and gene trees: nodes are records in an
indexed sequence, every node has 0 or 2 children (the root may have 1), leaf
labels are unique, heights strictly decrease from the root toward the leaves
and every leaf sits at height 0.  Heights are exact rationals so that all
downstream geometry and crossing counts are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class Node:
    parent: int | None
    children: tuple[int, ...]
    label: str  # '' for internal nodes
    height: Fraction


class PhyloTree:
    """Immutable rooted tree; node ids are indices into ``nodes``."""

    __slots__ = ("nodes", "root", "_label_index")

    def __init__(self, nodes: tuple[Node, ...], root: int):
        self.nodes = tuple(nodes)
        self.root = root
        self._label_index = {
            n.label: i for i, n in enumerate(self.nodes) if not n.children
        }

    # -- basic accessors -------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def is_leaf(self, v: int) -> bool:
        return not self.nodes[v].children

    def children(self, v: int) -> tuple[int, ...]:
        return self.nodes[v].children

    def parent(self, v: int) -> int | None:
        return self.nodes[v].parent

    def height(self, v: int) -> Fraction:
        return self.nodes[v].height

    def label(self, v: int) -> str:
        return self.nodes[v].label

    def node_by_label(self, label: str) -> int:
        return self._label_index[label]

    def leaves(self) -> tuple[int, ...]:
        """Leaf ids in stored (in-order) left-to-right order."""
        return tuple(v for v in self.inorder() if self.is_leaf(v))

    def leaf_labels(self) -> tuple[str, ...]:
        return tuple(self.nodes[v].label for v in self.leaves())

    def binary_inner(self) -> tuple[int, ...]:
        """Ids of vertices with exactly two children."""
        return tuple(i for i, n in enumerate(self.nodes) if len(n.children) == 2)

    # -- traversals (iterative: gadget trees can be deep) ----------------

    def inorder(self) -> list[int]:
        out: list[int] = []
        stack: list[tuple[int, bool]] = [(self.root, False)]
        while stack:
            v, expanded = stack.pop()
            ch = self.nodes[v].children
            if expanded or not ch:
                out.append(v)
            elif len(ch) == 1:
                # unary root: emit before its child
                out.append(v)
                stack.append((ch[0], False))
            else:
                stack.append((ch[1], False))
                stack.append((v, True))
                stack.append((ch[0], False))
        return out

    def postorder(self) -> list[int]:
        out: list[int] = []
        stack = [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(self.nodes[v].children)
        out.reverse()
        return out

    def subtree(self, v: int) -> list[int]:
        """All vertex ids in the subtree rooted at v (preorder)."""
        out = []
        stack = [v]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(reversed(self.nodes[w].children))
        return out

    def clade(self, v: int) -> tuple[int, ...]:
        """Leaf ids below v, left to right."""
        out = []
        stack = [v]
        while stack:
            w = stack.pop()
            ch = self.nodes[w].children
            if not ch:
                out.append(w)
            else:
                stack.extend(reversed(ch))
        return tuple(out)

    def depth(self, v: int) -> int:
        d = 0
        p = self.nodes[v].parent
        while p is not None:
            d += 1
            p = self.nodes[p].parent
        return d

    def ancestors(self, v: int) -> list[int]:
        """Strict ancestors of v, nearest first."""
        out = []
        p = self.nodes[v].parent
        while p is not None:
            out.append(p)
            p = self.nodes[p].parent
        return out

    def lca(self, u: int, v: int) -> int:
        if u == v:
            return u
        seen = {u}
        seen.update(self.ancestors(u))
        while v not in seen:
            v = self.nodes[v].parent  # type: ignore[assignment]
        return v

    def is_ancestor(self, a: int, v: int) -> bool:
        """True if a == v or a is a strict ancestor of v."""
        while v is not None:
            if v == a:
                return True
            v = self.nodes[v].parent  # type: ignore[assignment]
        return False

    # -- validation -------------------------------------------------------

    def structural_violations(self) -> list[str]:
        """Check degree, height monotonicity, leaf heights and labels."""
        bad: list[str] = []
        labels: dict[str, int] = {}
        for i, n in enumerate(self.nodes):
            k = len(n.children)
            if i == self.root:
                if k not in (0, 1, 2):
                    bad.append(f"root {i} has {k} children")
            elif k not in (0, 2):
                bad.append(f"node {i} has {k} children (expected 0 or 2)")
            for c in n.children:
                if self.nodes[c].parent != i:
                    bad.append(f"parent pointer of {c} inconsistent")
                if self.nodes[c].height >= n.height:
                    bad.append(
                        f"height not strictly decreasing on edge {i}->{c}"
                    )
            if not n.children:
                if n.height != 0:
                    bad.append(f"leaf {i} ({n.label!r}) has nonzero height")
                if not n.label:
                    bad.append(f"leaf {i} has empty label")
                elif n.label in labels:
                    bad.append(
                        f"duplicate leaf label {n.label!r} at {labels[n.label]} and {i}"
                    )
                else:
                    labels[n.label] = i
        if self.nodes[self.root].parent is not None:
            bad.append("root has a parent")
        return bad


# -- construction helpers ---------------------------------------------------


def as_fraction(x) -> Fraction:
    """Exact conversion; decimal strings keep their power-of-ten denominator."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        from decimal import Decimal

        if "/" in x:
            num, den = x.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(Decimal(x))
    if isinstance(x, float):
        raise TypeError("refusing float height; pass str, int or Fraction")
    return Fraction(x)


def build_tree(spec) -> PhyloTree:
    """Build a tree from nested tuples.

    A leaf is a label string; an inner node is ``(height, left, right)``;
    a unary root is ``(height, child)``.  Heights accept anything
    ``as_fraction`` does.
    """
    nodes: list[Node] = []

    def rec(s, parent: int | None) -> int:
        if isinstance(s, str):
            nodes.append(Node(parent, (), s, Fraction(0)))
            return len(nodes) - 1
        h = as_fraction(s[0])
        my = len(nodes)
        nodes.append(Node(parent, (), "", h))
        child_ids = tuple(rec(c, my) for c in s[1:])
        nodes[my] = Node(parent, child_ids, "", h)
        return my

    root = rec(spec, None)
    return PhyloTree(tuple(nodes), root)


def relabel(tree: PhyloTree, mapping: dict[str, str]) -> PhyloTree:
    nodes = tuple(
        Node(n.parent, n.children, mapping.get(n.label, n.label), n.height)
        for n in tree.nodes
    )
    return PhyloTree(nodes, tree.root)


def with_unary_root(tree: PhyloTree, factor: Fraction = Fraction(21, 20)) -> PhyloTree:
    """Return the tree with an out-degree-1 root.

    If the root already has one child the tree is returned unchanged;
    otherwise a new root is synthesized at ``factor`` times the root height
    (the drawing style assumes roots of out-degree 1).
    """
    if len(tree.nodes[tree.root].children) == 1:
        return tree
    old_root = tree.root
    new_id = len(tree.nodes)
    top = tree.nodes[old_root].height * factor
    if top <= tree.nodes[old_root].height:  # zero-height root
        top = tree.nodes[old_root].height + 1
    nodes = list(tree.nodes)
    nodes[old_root] = Node(
        new_id,
        nodes[old_root].children,
        nodes[old_root].label,
        nodes[old_root].height,
    )
    nodes.append(Node(None, (old_root,), "", top))
    return PhyloTree(tuple(nodes), new_id)


def merge_gene_trees(trees: list[PhyloTree], root_height) -> PhyloTree:
    """Join gene trees under one super root via a left-combed binary spine.

    A single input gains an out-degree-1 super root at ``root_height``;
    ``k`` inputs gain ``k - 1`` spine nodes whose heights are evenly spaced
    between the highest input root and ``root_height`` (the super root sits
    exactly at ``root_height``).  Leaf labels must be globally unique.
    """
    if not trees:
        raise ValueError("no gene trees to merge")
    rh = as_fraction(root_height)
    seen: dict[str, int] = {}
    for t in trees:
        for lbl in t.leaf_labels():
            if lbl in seen:
                raise ValueError(f"duplicate leaf label {lbl!r} across gene trees")
            seen[lbl] = 1
    top = max(t.nodes[t.root].height for t in trees)
    if rh <= top:
        raise ValueError(
            f"super-root height {rh} not above all input roots (max {top})"
        )

    nodes: list[Node] = []
    roots: list[int] = []
    for t in trees:
        off = len(nodes)
        for n in t.nodes:
            nodes.append(
                Node(
                    None if n.parent is None else n.parent + off,
                    tuple(c + off for c in n.children),
                    n.label,
                    n.height,
                )
            )
        roots.append(t.root + off)

    if len(roots) == 1:
        rid = len(nodes)
        nodes[roots[0]] = _reparent(nodes[roots[0]], rid)
        nodes.append(Node(None, (roots[0],), "", rh))
        return PhyloTree(tuple(nodes), rid)

    k = len(roots)
    spine = roots[0]
    for i, r in enumerate(roots[1:], start=1):
        h = top + (rh - top) * Fraction(i, k - 1)
        sid = len(nodes)
        nodes[spine] = _reparent(nodes[spine], sid)
        nodes[r] = _reparent(nodes[r], sid)
        nodes.append(Node(None, (spine, r), "", h))
        spine = sid
    return PhyloTree(tuple(nodes), spine)


def _reparent(n: Node, parent: int) -> Node:
    return Node(parent, n.children, n.label, n.height)


def canonical_form(tree: PhyloTree):
    """Nested-tuple form for isomorphism checks (child order preserved)."""

    def rec(v: int):
        n = tree.nodes[v]
        if not n.children:
            return (n.label, n.height)
        return (n.height,) + tuple(rec(c) for c in n.children)

    return rec(tree.root)
