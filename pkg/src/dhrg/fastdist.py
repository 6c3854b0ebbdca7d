"""Array-encoded frozen balls and a batch grid-distance kernel.

The lazy grid is ideal for incremental exploration but pointer chasing in
Python is too slow for tens of millions of distance queries.  For bulk
verification and benchmarks, a frozen ball is exported to flat arrays
(parents by index, ring positions, ring sizes) and the same up-lateral-
down algorithm as griddist.grid_distance runs as a compiled kernel, with
lateral offsets reduced to modular arithmetic on ring positions.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


class FrozenBall:
    """Flat-array view of B_depth: vertices indexed ring by ring."""

    def __init__(self, grid, depth):
        self.grid = grid
        self.depth = depth
        vertices = grid.ball(depth)
        for v in vertices:
            grid.succ(v), grid.pred(v)
        index = {v.uid: i for i, v in enumerate(vertices)}
        n = len(vertices)
        self.vertices = vertices
        self.index = index
        self.depths = np.fromiter((v.depth for v in vertices), np.int64, n)
        self.p_left = np.zeros(n, np.int64)
        self.p_right = np.zeros(n, np.int64)
        self.ring_pos = np.zeros(n, np.int64)
        self.ring_sizes = np.zeros(depth + 1, np.int64)
        pos = 0
        for i, v in enumerate(vertices):
            if i and self.depths[i] != self.depths[i - 1]:
                pos = 0
            self.ring_pos[i] = pos
            pos += 1
            self.ring_sizes[v.depth] += 1
            if v.p_right is not None:
                self.p_left[i] = index[grid.parent_left(v).uid]
                self.p_right[i] = index[v.p_right.uid]

    def adjacency(self):
        """Sparse symmetric adjacency of the ball (ring + parent edges)."""
        from scipy.sparse import coo_matrix
        g = self.grid
        rows, cols = [], []
        for i, v in enumerate(self.vertices):
            for u in (g.succ(v), g.pred(v), *g.parents(v)):
                j = self.index.get(u.uid)
                if j is not None and j != i:
                    rows.append(i)
                    cols.append(j)
        data = np.ones(len(rows), np.int8)
        n = len(self.vertices)
        m = coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        return ((m + m.T) > 0).astype(np.int8)


@njit(cache=True)
def _one_distance(i, j, depths, p_left, p_right, ring_pos, ring_sizes, window):
    if i == j:
        return 0
    a = 0
    c = 0
    vl = i
    vr = i
    wl = j
    wr = j
    while depths[vl] > depths[wl]:
        vl = p_left[vl]
        vr = p_right[vr]
        a += 1
    while depths[wl] > depths[vl]:
        wl = p_left[wl]
        wr = p_right[wr]
        c += 1
    best = 1 << 30
    while True:
        n = ring_sizes[depths[vl]]
        span_v = (ring_pos[vr] - ring_pos[vl]) % n
        span_w = (ring_pos[wr] - ring_pos[wl]) % n
        gap = -1
        if ((ring_pos[wl] - ring_pos[vl]) % n <= span_v
                or (ring_pos[vl] - ring_pos[wl]) % n <= span_w):
            gap = 0
        else:
            g1 = (ring_pos[wl] - ring_pos[vr]) % n
            g2 = (ring_pos[vl] - ring_pos[wr]) % n
            g12 = min(g1, g2)
            if g12 <= window:
                gap = g12
        if gap >= 0 and a + gap + c < best:
            best = a + gap + c
        if depths[vl] == 0 or a + c + 2 >= best:
            return best
        vl = p_left[vl]
        vr = p_right[vr]
        a += 1
        wl = p_left[wl]
        wr = p_right[wr]
        c += 1


@njit(cache=True, parallel=True)
def _rows_kernel(sources, depths, p_left, p_right, ring_pos, ring_sizes,
                 window, out):
    n = depths.shape[0]
    for s in prange(sources.shape[0]):
        i = sources[s]
        for j in range(n):
            out[s, j] = _one_distance(i, j, depths, p_left, p_right,
                                      ring_pos, ring_sizes, window)


def distance_rows(ball: FrozenBall, sources):
    """Distances from each source index to every ball vertex."""
    sources = np.asarray(sources, np.int64)
    out = np.zeros((len(sources), len(ball.vertices)), np.int32)
    _rows_kernel(sources, ball.depths, ball.p_left, ball.p_right,
                 ball.ring_pos, ball.ring_sizes,
                 ball.grid.spec.offset_bound, out)
    return out
