"""Exact grid distances and the distance tally counter.

Both algorithms exploit the tree-like shape of shortest paths in a
hyperbolic triangular grid: any shortest path between v and w can be
written as `a` steps toward the root from v, at most a small lateral
offset `b` along one ring, and `c` steps back down to w.  The lateral
bound (GridSpec.offset_bound) is calibrated empirically against BFS and
frozen per grid.

The tally counter stores, for every added vertex, its chain of ancestor
segments P^h([v,v]).  Per segment S a count array a(S) records, indexed
by height-below, how much added weight sits underneath.  A query walks
its own ancestor chain, collects active segments within the lateral
window at each level, and attributes each unit of weight exactly once at
its true distance (nearby child segments are subtracted from their
parents, and the level at which two chains first meet is corrected by a
min-recursion up the chain, so a deep meeting at offset 3 cannot hide a
cheaper meeting at offset 0 two levels up).
"""

from __future__ import annotations

import numpy as np

from .grid import GridError


def _segment_vertices(g, left, right, cap):
    """Vertices of the ring segment [left, right], leftmost first."""
    out = [left]
    cur = left
    while cur is not right:
        cur = g.succ(cur)
        out.append(cur)
        if len(out) > cap:
            raise GridError("ancestor segment longer than the grid bound")
    return out


def _segment_gap(g, v_left, v_right, w_left, w_right, window, cap):
    """Minimal ring offset between two segments: 0 when they share a
    vertex, otherwise the shorter of the two separating arcs if it is at
    most `window`, else None."""
    sv = {u.uid for u in _segment_vertices(g, v_left, v_right, cap)}
    sw = {u.uid for u in _segment_vertices(g, w_left, w_right, cap)}
    if sv & sw:
        return 0
    best = None
    cur = v_right
    for step in range(1, window + 1):
        cur = g.succ(cur)
        if cur is w_left:
            best = step
            break
    cur = w_right
    for step in range(1, window + 1):
        cur = g.succ(cur)
        if cur is v_left:
            if best is None or step < best:
                best = step
            break
    return best


def grid_distance(g, v, w):
    """Exact shortest-path length between grid vertices, in O(distance).

    Walks both ancestor chains in lock step after equalizing depths; at
    each level the lateral offset between the two ancestor segments gives
    a candidate a + b + c, and the walk stops once going deeper cannot
    beat the best candidate.
    """
    if v is w:
        return 0
    window = g.spec.offset_bound
    cap = g.spec.max_segment + 1
    a = c = 0
    v_l = v_r = v
    w_l = w_r = w
    while v_l.depth > w_l.depth:
        v_l, v_r, a = g.parent_left(v_l), g.parent_right(v_r), a + 1
    while w_l.depth > v_l.depth:
        w_l, w_r, c = g.parent_left(w_l), g.parent_right(w_r), c + 1
    best = None
    while True:
        gap = _segment_gap(g, v_l, v_r, w_l, w_r, window, cap)
        if gap is not None and (best is None or a + gap + c < best):
            best = a + gap + c
        if v_l.depth == 0:
            break
        if best is not None and a + c + 2 >= best:
            break
        v_l, v_r, a = g.parent_left(v_l), g.parent_right(v_r), a + 1
        w_l, w_r, c = g.parent_left(w_l), g.parent_right(w_r), c + 1
    return best


class _Segment:
    """Active ancestor segment: one node of the segment forest."""

    __slots__ = ("key", "left", "right", "level", "length",
                 "parent", "children", "counts", "hi")

    def __init__(self, key, left, right, level, length):
        self.key = key
        self.left = left
        self.right = right
        self.level = level
        self.length = length
        self.parent = None
        self.children = []
        self.counts = None  # numpy array indexed by height below the segment
        self.hi = 0         # logical length of counts (arrays grow by doubling)

    def __repr__(self):
        return (f"<Segment L{self.level} [{self.left.uid},{self.right.uid}] "
                f"len={self.length}>")


class TallyError(GridError):
    pass


class DistanceTallyCounter:
    """Distance histograms over a weighted vertex set.

    add(v, k) charges weight k to v in O(depth) amortized; tally(w)
    returns the exact array A with A[d] = total weight at grid distance d
    from w, in O(depth^2 * offset_bound).  Weights are 64-bit integers by
    default (the graph pipeline counts pairs); pass dtype=float for a
    real-weighted counter, which disables trace().
    """

    def __init__(self, g, dtype=np.int64):
        self.grid = g
        self.dtype = np.dtype(dtype)
        self._segments = {}
        self._by_left = {}
        self._by_right = {}
        self.total = self.dtype.type(0)
        self.max_height = 0

    @property
    def integer_weights(self):
        return self.dtype.kind == "i"

    def __len__(self):
        return len(self._segments)

    # -- structure maintenance ----------------------------------------------

    def _ensure(self, left, right, level):
        key = (left.uid, right.uid)
        seg = self._segments.get(key)
        if seg is None:
            length = len(_segment_vertices(self.grid, left, right,
                                           self.grid.spec.max_segment))
            seg = _Segment(key, left, right, level, length)
            seg.counts = np.zeros(1, self.dtype)
            self._segments[key] = seg
            self._by_left.setdefault(left.uid, []).append(seg)
            self._by_right.setdefault(right.uid, []).append(seg)
        return seg

    def _charge(self, seg, h, k):
        counts = seg.counts
        if h >= len(counts):
            grown = np.zeros(max(h + 1, 2 * len(counts)), self.dtype)
            grown[:len(counts)] = counts
            seg.counts = counts = grown
        counts[h] += k
        if h >= seg.hi:
            seg.hi = h + 1

    def add(self, v, k):
        """Add weight k at vertex v, activating its ancestor chain."""
        if self.integer_weights and k != int(k):
            raise TallyError("integer counter got a non-integer weight")
        g = self.grid
        seg = self._ensure(v, v, v.depth)
        self._charge(seg, 0, k)
        h = 1
        while seg.level > 0:
            parent = self._ensure(g.parent_left(seg.left),
                                  g.parent_right(seg.right), seg.level - 1)
            if seg.parent is None:
                seg.parent = parent
                parent.children.append(seg)
            elif seg.parent is not parent:
                raise TallyError("ancestor chain is not unique")
            self._charge(parent, h, k)
            seg, h = parent, h + 1
        self.total += self.dtype.type(k)
        self.max_height = max(self.max_height, v.depth)

    # -- queries --------------------------------------------------------------

    def _query_chain(self, w):
        g = self.grid
        chain = [(w, w)]
        q_l = q_r = w
        while q_l.depth > 0:
            q_l, q_r = g.parent_left(q_l), g.parent_right(q_r)
            chain.append((q_l, q_r))
        return chain

    def _collect_level(self, q_l, q_r, level):
        """Active segments within the lateral window of [q_l, q_r],
        as {segment key: (segment, min gap)}."""
        g = self.grid
        window = g.spec.offset_bound
        reach = window + g.spec.max_segment
        ring = g.ring_size(level)
        found = {}

        def note(seg, gap):
            prev = found.get(seg.key)
            if prev is None or gap < prev[1]:
                found[seg.key] = (seg, gap)

        cur = q_l
        while True:  # inside the query span: everything here overlaps
            for seg in self._by_left.get(cur.uid, ()):
                note(seg, 0)
            if cur is q_r:
                break
            cur = g.succ(cur)
        cur = q_r
        for step in range(1, min(window, ring - 1) + 1):
            cur = g.succ(cur)
            for seg in self._by_left.get(cur.uid, ()):
                note(seg, step)
        cur = q_l
        for step in range(1, min(reach, ring - 1) + 1):
            cur = g.pred(cur)
            for seg in self._by_left.get(cur.uid, ()):
                # segment starts `step` left of the span; it overlaps if it
                # is long enough to reach back into it
                gap = 0 if seg.length > step else step - seg.length + 1
                if gap <= window:
                    note(seg, gap)
        return found

    def tally(self, w, _contribs=None):
        """Distance histogram of all added weight relative to w."""
        depth_w = w.depth
        chain = self._query_chain(w)
        levels = [self._collect_level(q_l, q_r, depth_w - a)
                  for a, (q_l, q_r) in enumerate(chain)]

        # cheapest meeting cost up the chain: M(S) = min over k >= 0 of
        # (height of w above level(S)-k) + k + gap at level(S)-k
        memo = {}

        def meet_cost(seg):
            m = memo.get(seg.key)
            if m is not None:
                return m
            a = depth_w - seg.level
            hit = levels[a].get(seg.key) if 0 <= a < len(levels) else None
            m = a + hit[1] if hit is not None else None
            if seg.level > 0 and seg.parent is not None:
                up = meet_cost(seg.parent)
                if up is not None and (m is None or up + 1 < m):
                    m = up + 1
            memo[seg.key] = m
            return m

        out = np.zeros(depth_w + self.max_height
                       + self.grid.spec.offset_bound + 1, self.dtype)
        deeper = {}  # collected segments one level below, grouped by parent
        for a, level in enumerate(levels):
            for seg, _gap in level.values():
                m = meet_cost(seg)
                subtracted = deeper.get(seg.key, ())
                if subtracted:
                    claim = seg.counts[:seg.hi].copy()
                    for child in subtracted:
                        cc = child.counts[:child.hi]
                        claim[1:1 + len(cc)] -= cc
                else:
                    claim = seg.counts[:seg.hi]
                out[m:m + len(claim)] += claim
                if _contribs is not None:
                    keys = tuple(ch.key for ch in subtracted)
                    for c in np.flatnonzero(claim):
                        _contribs.append((m + int(c), claim[c], seg,
                                          int(c), keys))
            nxt = {}
            for seg, _gap in level.values():
                if seg.parent is not None:
                    nxt.setdefault(seg.parent.key, []).append(seg)
            deeper = nxt

        if out.sum() != self.total:
            raise TallyError("tally lost or double-counted weight; the "
                             "lateral window does not close on this grid")
        last = int(np.flatnonzero(out)[-1]) + 1 if out.any() else 1
        return out[:last]

    # -- trace ------------------------------------------------------------------

    def trace(self, seg, c, index):
        """The index-th (1-based) added vertex below `seg` at height c.
        Requires the integer-weight regime."""
        return self.trace_unit(seg, c, index)[0]

    def trace_unit(self, seg, c, index, excluded=()):
        """Like trace, but also returns the unit's 1-based position within
        the weight accumulated at the leaf vertex (so callers can tell
        apart co-located additions).  `excluded` skips the given child
        segment keys at the first descent level only; tally's contribution
        records use it to trace within marginal counts."""
        if not self.integer_weights:
            raise TallyError("trace needs integer weights")
        if c == 0:
            if seg.left is not seg.right:
                raise TallyError("height-0 trace on a non-singleton segment")
            if not 1 <= index <= seg.counts[0]:
                raise TallyError("trace index out of range")
            return seg.left, index
        if index < 1:
            raise TallyError("trace index out of range")
        acc = 0
        for child in seg.children:
            if child.key in excluded:
                continue
            weight = int(child.counts[c - 1]) if c - 1 < child.hi else 0
            if index <= acc + weight:
                return self.trace_unit(child, c - 1, index - acc)
            acc += weight
        raise TallyError("trace index out of range")
