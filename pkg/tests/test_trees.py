from fractions import Fraction

import pytest

from coalview.trees import (
    build_tree,
    canonical_form,
    merge_gene_trees,
    with_unary_root,
)


def test_build_and_accessors():
    t = build_tree((4, (2, "A", "B")))
    assert t.leaf_labels() == ("A", "B")
    assert t.height(t.root) == 4
    split = t.children(t.root)[0]
    assert t.height(split) == 2
    assert t.parent(split) == t.root
    assert t.structural_violations() == []


def test_lca_and_clade():
    t = build_tree((5, (3, (1, "a", "b"), "c")))
    a, b, c = (t.node_by_label(x) for x in "abc")
    ab = t.parent(a)
    assert t.lca(a, b) == ab
    assert t.lca(a, c) == t.children(t.root)[0]
    assert t.clade(t.children(t.root)[0]) == (a, b, c)
    assert t.is_ancestor(t.root, a)
    assert not t.is_ancestor(a, t.root)


def test_structural_violations_detected():
    t = build_tree((2, (3, "a", "b")))  # child above parent
    assert any("decreasing" in m for m in t.structural_violations())


def test_merge_singleton_adds_unary_root():
    t = build_tree((3, (1, "a", "b")))
    m = merge_gene_trees([t], 5)
    assert len(m.children(m.root)) == 1
    assert m.height(m.root) == 5
    # subtree unchanged
    assert canonical_form(t) == canonical_form(
        type(t)(m.nodes, m.children(m.root)[0])
    )


def test_merge_pair():
    t1 = build_tree((3, "a", "b"))
    t2 = build_tree((4, "c", "d"))
    m = merge_gene_trees([t1, t2], 5)
    assert m.height(m.root) == 5
    ch = m.children(m.root)
    assert {m.height(c) for c in ch} == {Fraction(3), Fraction(4)}


def test_merge_triple_spine_heights_evenly_spaced():
    ts = [build_tree((3, "a", "b")), build_tree((4, "c", "d")), build_tree((2, "e", "f"))]
    m = merge_gene_trees(ts, 7)
    # spine heights strictly between max input root (4) and 7, evenly spaced
    heights = sorted(
        m.height(v)
        for v in range(len(m.nodes))
        if m.children(v) and not m.label(v) and m.height(v) > 4
    )
    assert heights == [Fraction(11, 2), Fraction(7)]
    # monotone heights throughout
    assert m.structural_violations() == []


def test_merge_rejects_bad_inputs():
    t1 = build_tree((3, "a", "b"))
    t2 = build_tree((4, "a", "d"))
    with pytest.raises(ValueError, match="duplicate"):
        merge_gene_trees([t1, t2], 9)
    with pytest.raises(ValueError, match="not above"):
        merge_gene_trees([t1, build_tree((4, "c", "d"))], 4)


def test_with_unary_root():
    t = build_tree((2, "a", "b"))
    u = with_unary_root(t)
    assert len(u.children(u.root)) == 1
    assert u.height(u.root) == Fraction(21, 10)
    assert with_unary_root(u) is u
