"""Tree-in-tree geometry and crossing counts.

Two drawing styles share one combinatorial crossing semantics: a horizontal
connector through an inner gene vertex u crosses the vertical run of a gene
vertex v iff both the vertical overlap y(v) < y(u) < y(parent(v)) and the
horizontal overlap min(x_children(u)) < x(v) < max(x_children(u)) hold with
strict inequalities.  Contact at an endpoint never counts, which matches the
relaxation used by the exact integer model.  All coordinates are exact
rationals.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass, field
from fractions import Fraction

from .msc import (
    CONSTANT,
    Embedding,
    MSCInstance,
    extend_phi,
    species_order_realizable,
    validate_order,
)
from .trees import PhyloTree, as_fraction

RECTANGULAR = "rectangular"
PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class CrossingReport:
    count: int
    pairs: tuple[tuple[int, int], ...]  # (horizontal owner u, vertical owner v)


@dataclass(frozen=True)
class Segment:
    x1: Fraction
    y1: Fraction
    x2: Fraction
    y2: Fraction
    owner: int
    kind: str  # 'vertical' | 'connector' | 'rise' | 'jog'

    def is_horizontal(self) -> bool:
        return self.y1 == self.y2


@dataclass(frozen=True)
class Layout:
    style: str
    canvas: tuple[Fraction, Fraction]
    # rectangular: branch -> (x0, x1, y0, y1); proportional: branch -> list of
    # trapezoids (y0, y1, xl0, xr0, xl1, xr1), bottom to top
    species_shapes: dict
    gene_points: dict[int, tuple[Fraction, Fraction]]
    gene_segments: tuple[Segment, ...]
    shift_log: tuple = ()


def gene_positions(
    tree: PhyloTree, gene_order: tuple[int, ...]
) -> dict[int, Fraction]:
    """Leaf i of the order sits at x = 2i - 1; inner vertices at the midpoint
    of their children (recursively, possibly non-integer)."""
    pos: dict[int, Fraction] = {
        g: Fraction(2 * i + 1) for i, g in enumerate(gene_order)
    }
    for v in tree.postorder():
        ch = tree.children(v)
        if not ch:
            continue
        if len(ch) == 1:
            pos[v] = pos[ch[0]]
        else:
            pos[v] = (pos[ch[0]] + pos[ch[1]]) / 2
    return pos


# -- combinatorial count ------------------------------------------------------


def count_crossings(instance: MSCInstance, embedding: Embedding) -> CrossingReport:
    """Count crossings of the rectangular drawing determined by the embedding.

    Sweeps the vertical runs by height and queries each connector against the
    active set, so the cost is near-linear plus output size.
    """
    if not validate_order(instance, embedding):
        raise ValueError("embedding violates leaf-order requirements")
    return _count_positions(instance.gene, gene_positions(instance.gene, embedding.gene_order))


def _count_positions(tree: PhyloTree, pos: dict[int, Fraction]) -> CrossingReport:
    heights = {v: tree.height(v) for v in range(len(tree.nodes))}

    # rank x and y values once so the sweep compares plain ints
    xs = sorted({pos[v] for v in range(len(tree.nodes)) if tree.parent(v) is not None})
    xrank = {x: i for i, x in enumerate(xs)}
    ys = sorted(set(heights.values()))
    yrank = {y: i for i, y in enumerate(ys)}

    # event phases at equal height: remove verticals ending here, query
    # connectors here, then add verticals starting here -- equalities at
    # segment endpoints must never count
    REMOVE, QUERY, ADD = 0, 1, 2
    events: list[tuple[int, int, int, int, int]] = []
    for v in range(len(tree.nodes)):
        p = tree.parent(v)
        if p is not None:
            r = xrank[pos[v]]
            events.append((yrank[heights[v]], ADD, r, v, 0))
            events.append((yrank[heights[p]], REMOVE, r, v, 0))
        ch = tree.children(v)
        if len(ch) == 2:
            a, b = xrank[pos[ch[0]]], xrank[pos[ch[1]]]
            lo, hi = (a, b) if a <= b else (b, a)
            events.append((yrank[heights[v]], QUERY, lo, v, hi))
    events.sort()

    active: list[tuple[int, int]] = []  # (xrank, vertex), sorted
    pairs: list[tuple[int, int]] = []
    for _, phase, r, v, hi in events:
        if phase == ADD:
            insort(active, (r, v))
        elif phase == REMOVE:
            idx = bisect_left(active, (r, v))
            del active[idx]
        else:
            i = bisect_left(active, (r + 1, -1))
            j = bisect_left(active, (hi, -1))
            for t in range(i, j):
                pairs.append((v, active[t][1]))
    pairs.sort()
    return CrossingReport(len(pairs), tuple(pairs))


# -- rectangular layout -------------------------------------------------------


def _species_spans(
    instance: MSCInstance, species_order: tuple[int, ...]
) -> dict[int, tuple[Fraction, Fraction]]:
    """x-interval per species-tree node under rectangular widths 2*n(s)."""
    S = instance.species
    counts: dict[int, int] = {}
    for g in instance.gene.leaves():
        s = instance.phi[g]
        counts[s] = counts.get(s, 0) + 1
    span: dict[int, tuple[Fraction, Fraction]] = {}
    x = Fraction(0)
    for s in species_order:
        w = Fraction(2 * counts[s])
        span[s] = (x, x + w)
        x += w
    for v in S.postorder():
        ch = S.children(v)
        if ch:
            span[v] = (min(span[c][0] for c in ch), max(span[c][1] for c in ch))
    return span


def layout_rectangular(
    instance: MSCInstance, embedding: Embedding, epsilon=Fraction(1, 8)
) -> Layout:
    """Rectangular style: species branches tile the canvas, the gene tree is
    an orthogonal cladogram.  Coincident overlapping verticals are nudged
    apart; the nudge directions are chosen (and the magnitude shrunk if
    needed) so the drawn crossings equal the combinatorial count exactly."""
    eps = as_fraction(epsilon)
    if not (0 < eps < Fraction(1, 4)):
        raise ValueError("epsilon must lie strictly between 0 and 1/4")
    if not validate_order(instance, embedding):
        raise ValueError("embedding violates leaf-order requirements")
    if not species_order_realizable(instance.species, embedding.species_order):
        raise ValueError("species order not realizable by rotations")

    S, T = instance.species, instance.gene
    span = _species_spans(instance, embedding.species_order)
    top = max(S.height(S.root), T.height(T.root))
    width = Fraction(2 * len(T.leaves()))

    shapes: dict[int, tuple[Fraction, Fraction, Fraction, Fraction]] = {}
    for c in range(len(S.nodes)):
        p = S.parent(c)
        if p is None:
            continue
        y1 = top if p == S.root and len(S.children(S.root)) == 1 else S.height(p)
        shapes[c] = (span[c][0], span[c][1], S.height(c), y1)
    if len(S.children(S.root)) == 0:  # single-species tree: one column
        shapes[S.root] = (Fraction(0), width, Fraction(0), top)

    base = gene_positions(T, embedding.gene_order)
    combinatorial = _count_positions(T, base)

    shifts, log = _resolve_vertical_overlaps(T, base, top, eps, combinatorial.count)
    pos = {v: base[v] + shifts.get(v, Fraction(0)) for v in base}

    points: dict[int, tuple[Fraction, Fraction]] = {}
    segs: list[Segment] = []
    for v in range(len(T.nodes)):
        points[v] = (pos[v], T.height(v))
        p = T.parent(v)
        if p is not None:
            ytop = top if p == T.root and len(T.children(T.root)) == 1 else T.height(p)
            segs.append(Segment(pos[v], T.height(v), pos[v], ytop, v, "vertical"))
        ch = T.children(v)
        if len(ch) == 2:
            segs.append(
                Segment(pos[ch[0]], T.height(v), pos[ch[1]], T.height(v), v, "connector")
            )
    if len(T.children(T.root)) == 1:
        points[T.root] = (pos[T.children(T.root)[0]], top)

    log = log + _horizontal_overlaps(T, pos)
    return Layout(RECTANGULAR, (width, top), shapes, points, tuple(segs), tuple(log))


def _vertical_runs(tree: PhyloTree, pos, top):
    runs = []
    for v in range(len(tree.nodes)):
        p = tree.parent(v)
        if p is None:
            continue
        ytop = top if p == tree.root and len(tree.children(tree.root)) == 1 else tree.height(p)
        runs.append((pos[v], tree.height(v), ytop, v))
    return runs


def _resolve_vertical_overlaps(tree, base, top, eps, want_count):
    """Find collision clusters of coincident overlapping verticals and pick
    per-vertex x-nudges that preserve the crossing count."""
    runs = _vertical_runs(tree, base, top)
    by_x: dict[Fraction, list] = {}
    for x, y0, y1, v in runs:
        by_x.setdefault(x, []).append((y0, y1, v))
    clusters: list[list[tuple]] = []
    for x, items in sorted(by_x.items()):
        if len(items) < 2:
            continue
        items.sort(key=lambda t: (t[1], t[0], t[2]))  # by top, bottom, id
        # connected overlap components along y
        comp = [items[0]]
        for it in items[1:]:
            if any(it[0] < other[1] and other[0] < it[1] for other in comp):
                comp.append(it)
            else:
                if len(comp) > 1:
                    clusters.append(comp)
                comp = [it]
        if len(comp) > 1:
            clusters.append(comp)
    if not clusters:
        return {}, ()

    def candidate(shrink: int, flip_mask: int):
        shifts: dict[int, Fraction] = {}
        mag = eps / (1 << shrink)
        bit = 0
        for comp in clusters:
            for j, (y0, y1, v) in enumerate(comp):
                p = tree.parent(v)
                d = 0
                if p is not None and base[p] != base[v]:
                    d = 1 if base[p] > base[v] else -1
                if d == 0:
                    d = -1
                if j % 2 == 1:
                    d = -d
                if flip_mask >> bit & 1:
                    d = -d
                bit += 1
                shifts[v] = d * mag * (j // 2 + 1)
        return shifts

    nbits = sum(len(c) for c in clusters)
    for shrink in range(40):
        for mask in range(1 << min(nbits, 10)):
            shifts = candidate(shrink, mask)
            if _orthogonal_count(tree, base, shifts, top) == want_count:
                log = tuple(
                    ("v-shift", v, dx) for v, dx in sorted(shifts.items()) if dx
                )
                return shifts, log
    raise ValueError("could not resolve coincident verticals without changing crossings")


def _orthogonal_count(tree, base, shifts, top) -> int:
    pos = {v: base[v] + shifts.get(v, Fraction(0)) for v in base}
    verts = [(x, y0, y1) for x, y0, y1, _ in _vertical_runs(tree, pos, top)]
    horiz = []
    for v in range(len(tree.nodes)):
        ch = tree.children(v)
        if len(ch) == 2:
            a, b = pos[ch[0]], pos[ch[1]]
            horiz.append((tree.height(v), min(a, b), max(a, b)))
    n = 0
    for y, lo, hi in horiz:
        if lo == hi:
            continue
        for x, y0, y1 in verts:
            if lo < x < hi and y0 < y < y1:
                n += 1
    return n


def _horizontal_overlaps(tree, pos):
    """Connectors sharing a height with overlapping interiors are logged,
    never perturbed: nudging heights would misrepresent the input times."""
    by_y: dict[Fraction, list] = {}
    for v in range(len(tree.nodes)):
        ch = tree.children(v)
        if len(ch) == 2:
            a, b = pos[ch[0]], pos[ch[1]]
            by_y.setdefault(tree.height(v), []).append((min(a, b), max(a, b), v))
    log = []
    for y, items in sorted(by_y.items()):
        items.sort()
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                if items[j][0] < items[i][1] and items[i][0] < items[j][1]:
                    log.append(("h-overlap", items[i][2], items[j][2]))
    return tuple(log)


# -- geometric count ----------------------------------------------------------


def count_crossings_geometric(layout: Layout) -> CrossingReport:
    """Exact count of proper pairwise crossings among the gene segments.

    Only transversal interior-interior intersections count: contact at a
    segment endpoint or collinear overlap never does.
    """
    segs = [s for s in layout.gene_segments if (s.x1, s.y1) != (s.x2, s.y2)]
    if all(s.x1 == s.x2 or s.y1 == s.y2 for s in segs):
        pairs = _orthogonal_pairs(segs)
    else:
        pairs = _general_pairs(segs)
    pairs.sort()
    return CrossingReport(len(pairs), tuple(pairs))


def _orthogonal_pairs(segs) -> list[tuple[int, int]]:
    verts, horiz = [], []
    for s in segs:
        if s.x1 == s.x2:
            verts.append((s.x1, min(s.y1, s.y2), max(s.y1, s.y2), s.owner))
        else:
            horiz.append((s.y1, min(s.x1, s.x2), max(s.x1, s.x2), s.owner))
    xs = sorted({v[0] for v in verts})
    xrank = {x: i for i, x in enumerate(xs)}
    ys = sorted({v[1] for v in verts} | {v[2] for v in verts} | {h[0] for h in horiz})
    yrank = {y: i for i, y in enumerate(ys)}
    REMOVE, QUERY, ADD = 0, 1, 2
    events = []
    for x, y0, y1, owner in verts:
        events.append((yrank[y0], ADD, xrank[x], owner))
        events.append((yrank[y1], REMOVE, xrank[x], owner))
    for y, x0, x1, owner in horiz:
        lo = bisect_left(xs, x0)
        if lo < len(xs) and xs[lo] == x0:
            lo += 1
        hi = bisect_left(xs, x1)
        events.append((yrank[y], QUERY, lo, owner, hi))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    active: list[tuple[int, int]] = []
    pairs = []
    for ev in events:
        if ev[1] == ADD:
            insort(active, (ev[2], ev[3]))
        elif ev[1] == REMOVE:
            del active[bisect_left(active, (ev[2], ev[3]))]
        else:
            _, _, lo, owner, hi = ev
            i = bisect_left(active, (lo, -1))
            j = bisect_left(active, (hi, -1))
            for t in range(i, j):
                pairs.append((owner, active[t][1]))
    return pairs


def _cross(ox, oy, ax, ay, bx, by) -> Fraction:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _proper(s: Segment, t: Segment) -> bool:
    d1 = _cross(t.x1, t.y1, t.x2, t.y2, s.x1, s.y1)
    d2 = _cross(t.x1, t.y1, t.x2, t.y2, s.x2, s.y2)
    d3 = _cross(s.x1, s.y1, s.x2, s.y2, t.x1, t.y1)
    d4 = _cross(s.x1, s.y1, s.x2, s.y2, t.x2, t.y2)
    return ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and (
        (d3 > 0) != (d4 > 0)
    ) and d3 != 0 and d4 != 0


def _general_pairs(segs) -> list[tuple[int, int]]:
    order = sorted(range(len(segs)), key=lambda i: min(segs[i].y1, segs[i].y2))
    pairs = []
    for ii in range(len(order)):
        s = segs[order[ii]]
        s_hi = max(s.y1, s.y2)
        for jj in range(ii + 1, len(order)):
            t = segs[order[jj]]
            if min(t.y1, t.y2) >= s_hi:
                break
            if _proper(s, t):
                a, b = s, t
                if not a.is_horizontal() and b.is_horizontal():
                    a, b = b, a
                pairs.append((a.owner, b.owner))
    return pairs


# -- proportional layout ------------------------------------------------------


def layout_proportional(instance: MSCInstance, embedding: Embedding) -> Layout:
    """Proportional style: branch widths follow the population sizes, stacked
    as one row of trapezoids per species divergence, the whole silhouette
    symmetric about the central vertical axis.  Gene edges become polylines
    whose segments split each traversed trapezoid's top and bottom edges in
    the same ratio."""
    if not validate_order(instance, embedding):
        raise ValueError("embedding violates leaf-order requirements")
    if not species_order_realizable(instance.species, embedding.species_order):
        raise ValueError("species order not realizable by rotations")
    S, T = instance.species, instance.gene
    if len(S.children(S.root)) == 2:
        raise ValueError("proportional layout needs an out-degree-1 species root")
    pops = instance.populations

    top = max(S.height(S.root), T.height(T.root))
    bounds = sorted({S.height(v) for v in range(len(S.nodes))} | {Fraction(0), top})
    bounds = [h for h in bounds if h <= top]
    if bounds[-1] != top:
        bounds.append(top)

    # branch order: by leftmost species of the branch's clade
    spos = {s: i for i, s in enumerate(embedding.species_order)}
    first: dict[int, int] = {}
    for v in S.postorder():
        ch = S.children(v)
        first[v] = spos[v] if S.is_leaf(v) else min(first[c] for c in ch)

    def branch_top(c: int) -> Fraction:
        p = S.parent(c)
        return top if p == S.root else S.height(p)

    rows = []
    for i in range(len(bounds) - 1):
        lo, hi = bounds[i], bounds[i + 1]
        act = [
            c
            for c in range(len(S.nodes))
            if S.parent(c) is not None and S.height(c) <= lo and branch_top(c) >= hi
        ]
        act.sort(key=lambda c: first[c])
        rows.append((lo, hi, act))

    def width(c: int, h: Fraction) -> Fraction:
        p = S.parent(c)
        cap = S.height(p) if p is not None else h
        return pops.at(S, c, min(h, cap))

    frames = []  # per row: (lo, hi, act, bottom lefts, top lefts, widths@lo, widths@hi)
    maxtot = Fraction(0)
    for lo, hi, act in rows:
        wlo = {c: width(c, lo) for c in act}
        whi = {c: width(c, hi) for c in act}
        maxtot = max(maxtot, sum(wlo.values()), sum(whi.values()))
        frames.append((lo, hi, act, wlo, whi))
    W = maxtot

    def lefts(act, widths) -> dict[int, Fraction]:
        x = (W - sum(widths[c] for c in act)) / 2
        out = {}
        for c in act:
            out[c] = x
            x += widths[c]
        return out

    frame_data = []
    shapes: dict[int, list] = {}
    for lo, hi, act, wlo, whi in frames:
        llo, lhi = lefts(act, wlo), lefts(act, whi)
        frame_data.append((lo, hi, act, wlo, whi, llo, lhi))
        for c in act:
            shapes.setdefault(c, []).append(
                (lo, hi, llo[c], llo[c] + wlo[c], lhi[c], lhi[c] + whi[c])
            )

    def frame_at(h: Fraction, row: int):
        """(left, width) per active branch of the given row, evaluated at h."""
        lo, hi, act, wlo, whi, llo, lhi = frame_data[row]
        if h == lo:
            return {c: (llo[c], wlo[c]) for c in act}
        if h == hi:
            return {c: (lhi[c], whi[c]) for c in act}
        t = (h - lo) / (hi - lo)
        return {
            c: (llo[c] + (lhi[c] - llo[c]) * t, wlo[c] + (whi[c] - wlo[c]) * t)
            for c in act
        }

    def row_containing(h: Fraction) -> int:
        # row whose half-open interval [lo, hi) contains h
        for i, (lo, hi, *_) in enumerate(frame_data):
            if lo <= h < hi:
                return i
        return len(frame_data) - 1

    def arrival_row(h: Fraction) -> int:
        # at a row boundary, the row below (where an ascent evaluates its top)
        for i, (lo, hi, *_) in enumerate(frame_data):
            if lo < h <= hi:
                return i
        return 0

    # species block baseline subdivision
    counts: dict[int, int] = {}
    for g in T.leaves():
        counts[instance.phi[g]] = counts.get(instance.phi[g], 0) + 1
    order_pos = {g: i for i, g in enumerate(embedding.gene_order)}
    base_frame = frame_at(Fraction(0), 0)
    ratio0: dict[int, Fraction] = {}
    seen: dict[int, int] = {}
    for g in sorted(T.leaves(), key=lambda g: order_pos[g]):
        s = instance.phi[g]
        j = seen.get(s, 0)
        seen[s] = j + 1
        ratio0[g] = Fraction(2 * j + 1, 2 * counts[s])

    children_order = {}  # species node -> children in left-to-right branch order
    for v in range(len(S.nodes)):
        ch = S.children(v)
        if len(ch) == 2:
            children_order[v] = tuple(sorted(ch, key=lambda c: first[c]))

    def transfer_ratio(c: int, r: Fraction, h: Fraction) -> tuple[int, Fraction]:
        """Ratio of a lineage entering the branch above node parent(c)."""
        p = S.parent(c)
        sibs = children_order[p]
        wtops = [width(sib, h) for sib in sibs]
        off = Fraction(0)
        for sib, w in zip(sibs, wtops):
            if sib == c:
                break
            off += w
        return p, (off + r * width(c, h)) / sum(wtops)

    points: dict[int, tuple[Fraction, Fraction]] = {}
    segs: list[Segment] = []

    def climb(vx: Fraction, h0: Fraction, branch: int, r: Fraction, Y: Fraction, owner: int):
        """Trace a lineage from (vx, h0) up to height Y; returns (x, branch, r).

        Within each trapezoid the segment keeps the entry ratio (same-ratio
        rule).  Where the frame is discontinuous (piecewise-constant model)
        the polyline takes a horizontal jog at the row boundary.
        """
        x, h = vx, h0
        while h < Y:
            row = row_containing(h)
            act = frame_data[row][2]
            if branch not in act:  # branch ends exactly at h: enter the parent
                branch, r = transfer_ratio(branch, r, h)
                continue
            fl, fw = frame_at(h, row)[branch]
            cx = fl + r * fw
            if cx != x:
                segs.append(Segment(x, h, cx, h, owner, "jog"))
                x = cx
            stop = min(Y, frame_data[row][1])
            fl2, fw2 = frame_at(stop, row)[branch]
            nx = fl2 + r * fw2
            if stop > h:
                if segs and _extends(segs[-1], x, h, nx, stop, owner):
                    last = segs.pop()
                    segs.append(Segment(last.x1, last.y1, nx, stop, owner, "rise"))
                else:
                    segs.append(Segment(x, h, nx, stop, owner, "rise"))
            x, h = nx, stop
            if h < Y and branch_top(branch) == h:
                branch, r = transfer_ratio(branch, r, h)
        return x, branch, r

    state: dict[int, tuple[Fraction, int, Fraction]] = {}  # vertex -> (x, branch, ratio)
    for g in T.leaves():
        s = instance.phi[g]
        fl, fw = base_frame[s]
        state[g] = (fl + ratio0[g] * fw, s, ratio0[g])
        points[g] = (state[g][0], Fraction(0))

    unary_root = len(T.children(T.root)) == 1
    for u in sorted(
        (
            v
            for v in range(len(T.nodes))
            if len(T.children(v)) == 2 or (T.children(v) and v != T.root)
        ),
        key=lambda v: (T.height(v), v),
    ):
        ch = T.children(u)
        yu = T.height(u)
        ends = []
        for c in ch:
            x0, br, r = state[c]
            ends.append(climb(x0, T.height(c), br, r, yu, c))
        (xa, bra, _), (xb, brb, _) = ends
        segs.append(Segment(xa, yu, xb, yu, u, "connector"))
        xu = (xa + xb) / 2
        points[u] = (xu, yu)
        # the connector lives in the frame the children arrived in (the row
        # below yu when yu is a boundary); the upward state is expressed in
        # that frame and climb() jogs across the boundary as needed
        row = arrival_row(yu) if yu > 0 else 0
        if bra == brb:
            fl, fw = frame_at(yu, row)[bra]
            state[u] = (xu, bra, (xu - fl) / fw)
        else:
            # u sits exactly at the divergence joining the two child
            # branches: its ratio in the parent comes from the combined
            # children frame, mirroring the lineage transfer rule
            p = S.parent(bra)
            sibs = children_order[p]
            frames = frame_at(yu, row)
            left = frames[sibs[0]][0]
            total = sum(width(sib, yu) for sib in sibs)
            state[u] = (xu, p, (xu - left) / total)

    if unary_root:
        c = T.children(T.root)[0]
        x0, br, r = state[c]
        x, *_ = climb(x0, T.height(c), br, r, top, c)
        points[T.root] = (x, top)

    return Layout(PROPORTIONAL, (W, top), shapes, points, tuple(segs), ())


def _extends(last: Segment, x, h, nx, stop, owner) -> bool:
    """Merge collinear consecutive rise pieces of the same edge."""
    if last.owner != owner or last.kind != "rise":
        return False
    if (last.x2, last.y2) != (x, h):
        return False
    return _cross(last.x1, last.y1, nx, stop, last.x2, last.y2) == 0
