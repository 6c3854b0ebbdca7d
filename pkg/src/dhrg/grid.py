"""Lazy uniform hyperbolic triangular grids.

Two grids are provided: G7, the triangulation dual to the order-3
heptagonal tiling (all vertices of degree 7), and G67, the triangulation
dual to the truncated triangular tiling (vertices of degree 6 and 7).
Vertices are materialized on demand from the root outward; each ring R_k
(vertices at graph distance k from the root) is a cycle, and every
non-root vertex knows its depth, type, parents, ring neighbors and its
index among the children of its right parent.

Vertex types drive everything: the child-type word c(t) determines ring
growth, the substitution count matrix gives exact ring sizes and the
growth rate gamma, and (type, child index) selects the step isometry of
the geometric realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hypgeom
from .hypgeom import ORIGIN, TAU

MAX_DEPTH = 1 << 15


class GridError(Exception):
    pass


class FrozenGridError(GridError):
    """Raised when navigation would materialize past a freeze boundary."""


class SearchDepthExceeded(GridError):
    """nearest_vertex hit max_depth while still improving."""


@dataclass(frozen=True)
class VertexType:
    name: str
    degree: int
    n_parents: int
    child_types: tuple  # types of all children except the rightmost


@dataclass(frozen=True)
class GridSpec:
    """Static description of one grid: type alphabet, substitution rules,
    geometry constants, and the lateral offset bound used by the distance
    algorithm (calibrated against BFS, see griddist)."""

    kind: str
    types: dict  # name -> VertexType (non-root alphabet)
    root_type: VertexType
    edge_lengths: dict  # (degree, degree) -> hyperbolic length
    offset_bound: int
    expansion_constant: int
    # longest ancestor segment P^a([v,v]); 2 for G7, 3 for G67
    max_segment: int
    growth_rate: float = field(default=0.0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "growth_rate", _power_iteration(self))

    @property
    def min_edge_length(self):
        return min(self.edge_lengths.values())

    def count_matrix(self):
        """Substitution count matrix C with #(c(w)) = C #(w)."""
        names = sorted(self.types)
        idx = {t: i for i, t in enumerate(names)}
        m = np.zeros((len(names), len(names)))
        for t, vt in self.types.items():
            for u in vt.child_types:
                m[idx[u], idx[t]] += 1
        return names, m

    def dump(self):
        """Structured text export of the spec (for docs and cross checks)."""
        lines = [f"kind {self.kind}",
                 f"growth_rate {self.growth_rate!r}",
                 f"offset_bound {self.offset_bound}",
                 f"expansion_constant {self.expansion_constant}",
                 f"root degree={self.root_type.degree} "
                 f"children={','.join(self.root_type.child_types)}"]
        for name in sorted(self.types):
            vt = self.types[name]
            lines.append(f"type {name} degree={vt.degree} parents={vt.n_parents} "
                         f"children={','.join(vt.child_types)}")
        for (a, b), length in sorted(self.edge_lengths.items()):
            lines.append(f"edge {a}-{b} {length!r}")
        return "\n".join(lines) + "\n"


def _power_iteration(spec, tol=1e-9, max_iter=100000):
    _, m = spec.count_matrix()
    v = np.ones(m.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        nlam = float(w.max())
        v = w / nlam
        if abs(nlam - lam) <= tol * nlam:
            return nlam
        lam = nlam
    raise GridError("power iteration did not converge")


def _g7_spec():
    # types are named by parent count; the root has seven type-1 children
    t1 = VertexType("1", 7, 1, ("2", "1", "1"))
    t2 = VertexType("2", 7, 2, ("2", "1"))
    root = VertexType("root", 7, 0, ("1",) * 7)
    alpha = TAU / 7
    edge = hypgeom.triangle_side(alpha, alpha, alpha)
    return GridSpec("G7", {"1": t1, "2": t2}, root, {(7, 7): edge},
                    offset_bound=2, expansion_constant=1, max_segment=2)


def derive_g67_types():
    """Re-derive the G67 type table from the tessellation constraints.

    Constraints: every degree-7 vertex has only degree-6 neighbors, and the
    neighbors of a degree-6 vertex alternate between degree 6 and 7 around
    it.  A vertex type is the triple (degree, parent count, degree of the
    left sibling); around vertex v the cyclic neighbor order is
    (right parent, [left parent], predecessor, children..., successor), so
    the triple pins down the degree/parent-count/left-sibling-degree of
    every non-rightmost child, and the table closes over a finite alphabet.
    """
    def other(d):
        return 13 - d  # 6 <-> 7

    def child_states(deg, npar, lsdeg):
        n_children = deg - 2 - npar
        if deg == 7:
            degs = [6] * n_children
        else:
            # neighbor after the predecessor alternates away from lsdeg
            degs = [other(lsdeg) if i % 2 == 0 else lsdeg
                    for i in range(n_children)]
        listed = []
        for i in range(n_children - 1):  # rightmost child is owned by v+1
            c_npar = 2 if i == 0 else 1
            if i == 0:
                # left sibling of the shared child is the second-to-last
                # child of v-1: degree 6 if v-1 has degree 7, else it
                # alternates with the shared child's own degree
                c_ls = 6 if lsdeg == 7 else other(degs[0])
            else:
                c_ls = degs[i - 1]
            listed.append((degs[i], c_npar, c_ls))
        return listed

    # root of degree 6: ring 1 alternates degree 6,7 cyclically
    root_states = [(6, 1, 7), (7, 1, 6)] * 3
    table = {}
    todo = list(dict.fromkeys(root_states))
    while todo:
        st = todo.pop()
        if st in table:
            continue
        table[st] = child_states(*st)
        for child in table[st]:
            if child not in table:
                todo.append(child)
    return root_states, table


_G67_NAMES = {(6, 1, 6): "A", (7, 2, 6): "B", (6, 1, 7): "C",
              (6, 2, 7): "D", (6, 2, 6): "E", (7, 1, 6): "F"}


def _g67_spec():
    root_states, table = derive_g67_types()
    types = {}
    for st, children in table.items():
        name = _G67_NAMES[st]
        types[name] = VertexType(name, st[0], st[1],
                                 tuple(_G67_NAMES[c] for c in children))
    root = VertexType("root", 6, 0, tuple(_G67_NAMES[s] for s in root_states))
    beta = TAU / 6       # angle at a degree-6 corner
    alpha = TAU / 7      # angle at a degree-7 corner
    edges = {(6, 6): hypgeom.triangle_side(alpha, beta, beta),
             (6, 7): hypgeom.triangle_side(beta, beta, alpha)}
    edges[(7, 6)] = edges[(6, 7)]
    return GridSpec("G67", types, root, edges,
                    offset_bound=3, expansion_constant=2, max_segment=3)


_SPECS = {"G7": _g7_spec, "G67": _g67_spec}


def grid_spec(kind):
    try:
        return _SPECS[kind]()
    except KeyError:
        raise ValueError(f"unknown grid kind: {kind!r}") from None


class GridVertex:
    """One lazily materialized grid vertex.  Only the grid mutates these."""

    __slots__ = ("uid", "depth", "vtype", "p_right", "index",
                 "_left", "_right", "_children", "_frame")

    def __init__(self, uid, depth, vtype, p_right, index, n_owned):
        self.uid = uid
        self.depth = depth
        self.vtype = vtype
        self.p_right = p_right          # None only for the root
        self.index = index              # position among children of p_right
        self._left = None               # ring predecessor, if materialized
        self._right = None              # ring successor, if materialized
        self._children = [None] * n_owned
        self._frame = None

    def __repr__(self):
        return f"<GridVertex #{self.uid} d={self.depth} t={self.vtype.name}>"


class Grid:
    """Lazy grid with deterministic materialization: the same sequence of
    navigation calls always yields the same vertex uids."""

    def __init__(self, kind):
        self.spec = grid_spec(kind)
        self._steps = hypgeom.step_isometries(self.spec)
        self._count = 0
        self.frozen_depth = None
        self.root = self._new_vertex(0, self.spec.root_type, None, 0)
        self.root._frame = hypgeom.IDENTITY
        self._rings = [[self.root]]

    # -- materialization ---------------------------------------------------

    def _new_vertex(self, depth, vtype, p_right, index):
        if depth > MAX_DEPTH:
            raise GridError(f"depth {depth} exceeds the {MAX_DEPTH} cap")
        if self.frozen_depth is not None and depth > self.frozen_depth:
            raise FrozenGridError(
                f"grid frozen at depth {self.frozen_depth}")
        v = GridVertex(self._count, depth, vtype, p_right, index,
                       len(vtype.child_types))
        self._count += 1
        return v

    def __len__(self):
        return self._count

    def child(self, v, i):
        """The i-th non-rightmost child of v (the rightmost child of v is
        child(succ(v), 0))."""
        children = v._children
        w = children[i]
        if w is not None:
            return w
        vt = v.vtype
        w = self._new_vertex(v.depth + 1, self.spec.types[vt.child_types[i]],
                             v, i)
        children[i] = w
        left = children[i - 1] if i > 0 else self._last_owned(v._left)
        if left is not None:
            left._right, w._left = w, left
        right = (children[i + 1] if i + 1 < len(children)
                 else self._first_owned(v._right))
        if right is not None:
            w._right, right._left = right, w
        return w

    def _last_owned(self, v):
        if v is None or not v._children:
            return None
        return v._children[-1]

    def _first_owned(self, v):
        if v is None or not v._children:
            return None
        return v._children[0]

    # -- navigation --------------------------------------------------------

    def succ(self, v):
        """Ring successor v+1 (clockwise per the ring orientation)."""
        if v._right is not None:
            return v._right
        if v.p_right is None:
            return v  # |R_0| = 1
        u, i = v.p_right, v.index
        if u.p_right is None:
            w = self.child(u, (i + 1) % len(u._children))
        elif i + 1 < len(u._children):
            w = self.child(u, i + 1)
        else:
            w = self.child(self.succ(u), 0)
        v._right, w._left = w, v
        return w

    def pred(self, v):
        """Ring predecessor v-1."""
        if v._left is not None:
            return v._left
        if v.p_right is None:
            return v
        u, i = v.p_right, v.index
        if u.p_right is None:
            w = self.child(u, (i - 1) % len(u._children))
        elif i > 0:
            w = self.child(u, i - 1)
        else:
            p = self.pred(u)
            w = self.child(p, len(p._children) - 1)
        w._right, v._left = v, w
        return w

    def parent_right(self, v):
        return v.p_right

    def parent_left(self, v):
        if v.p_right is None:
            return None
        if v.vtype.n_parents == 1:
            return v.p_right
        return self.pred(v.p_right)

    def parents(self, v):
        """Parents as a ring segment of length 1 or 2, leftmost first."""
        if v.p_right is None:
            return ()
        if v.vtype.n_parents == 1:
            return (v.p_right,)
        return (self.pred(v.p_right), v.p_right)

    def children(self, v):
        """All children in ring order; the last one is shared with succ(v)."""
        owned = tuple(self.child(v, i) for i in range(len(v._children)))
        if v.p_right is None:
            return owned
        return owned + (self.child(self.succ(v), 0),)

    def child_leftmost(self, v):
        if v.p_right is None:
            return self.child(v, 0)
        return self.child(v, 0) if v._children else self.child(self.succ(v), 0)

    def degree(self, v):
        if v.p_right is None:
            return len(v._children)
        return v.vtype.n_parents + 2 + len(v._children) + 1

    def depth(self, v):
        return v.depth

    def type_of(self, v):
        return v.vtype.name

    def neighbors(self, v):
        """All grid neighbors in cyclic order (parents, pred, children, succ)."""
        if v.p_right is None:
            return self.children(v)
        return (self.parents(v)[::-1] + (self.pred(v),)
                + self.children(v) + (self.succ(v),))

    # -- rings and counting ------------------------------------------------

    def ring(self, k):
        """Materialize and return ring R_k as a list in cyclic order."""
        while len(self._rings) <= k:
            prev = self._rings[-1]
            nxt = []
            for v in prev:
                nxt.extend(self.child(v, i) for i in range(len(v._children)))
            self._rings.append(nxt)
        return self._rings[k]

    def ball(self, k):
        """All vertices of depth <= k, ring by ring."""
        return [v for d in range(k + 1) for v in self.ring(d)]

    def _desc_table(self, depth):
        # |c^i(t)| kept as exact integers; ring sizes overflow floats fast
        tbl = getattr(self, "_desc", None)
        if tbl is None:
            tbl = self._desc = [{t: 1 for t in self.spec.types}]
        while len(tbl) <= depth:
            prev = tbl[-1]
            tbl.append({t: sum(prev[u] for u in vt.child_types)
                        for t, vt in self.spec.types.items()})
        return tbl

    def descendant_count(self, type_name, i):
        """|c^i(t)|: number of depth-(d+i) vertices whose right-parent chain
        passes through a vertex of type t at depth d."""
        if i < 0:
            raise ValueError("negative power")
        return self._desc_table(i)[i][type_name]

    def ring_size(self, k):
        """Exact |R_k| without materialization (arbitrary precision)."""
        if k < 0:
            raise ValueError("negative ring index")
        if k == 0:
            return 1
        tbl = self._desc_table(k - 1)[k - 1]
        return sum(tbl[t] for t in self.spec.root_type.child_types)

    def growth_rate(self):
        return self.spec.growth_rate

    # -- geometric realization ----------------------------------------------

    def frame(self, v):
        """Isometry mapping the root frame onto v's frame (+x toward the
        right parent); renormalized every few levels to bound drift."""
        if v._frame is not None:
            return v._frame
        chain = []
        cur = v
        while cur._frame is None:
            chain.append(cur)
            cur = cur.p_right
        f = cur._frame
        for w in reversed(chain):
            f = f @ self._steps[(w.p_right.vtype.name, w.index)]
            # far from the origin the Minkowski norms underlying the
            # Gram-Schmidt cancel catastrophically; there the constraint
            # error is relative and acosh damps it, so leave those alone
            if w.depth % hypgeom.RENORM_EVERY == 0 and abs(f[2, 2]) < 1e6:
                f = hypgeom.renormalize(f)
            w._frame = f
        return v._frame

    def embed(self, v):
        """The realization j(v) in the hyperboloid model."""
        if v.p_right is None:
            return ORIGIN.copy()
        return self.frame(v)[:, 2].copy()

    def nearest_vertex(self, p, max_depth=None):
        """Grid vertex locally nearest to point p: steepest descent from the
        root, with a radius-2 check before accepting a local minimum.  The
        result beats all of its grid neighbors."""
        r = float(hypgeom.hyp_distance(ORIGIN, p))
        if max_depth is None:
            max_depth = int(math.ceil(r / self.spec.min_edge_length)) + 2
        cur = self.root
        d_cur = float(hypgeom.hyp_distance(self.embed(cur), p))
        while True:
            move = None
            d_best = d_cur
            for w in self.neighbors(cur):
                d_w = float(hypgeom.hyp_distance(self.embed(w), p))
                if d_w < d_best:
                    move, d_best = w, d_w
            if move is None:
                # plateau check two steps out before accepting
                for u in self.neighbors(cur):
                    for w in self.neighbors(u):
                        d_w = float(hypgeom.hyp_distance(self.embed(w), p))
                        if d_w < d_best:
                            move, d_best = w, d_w
                if move is None:
                    return cur
            if move.depth > max_depth:
                raise SearchDepthExceeded(
                    f"still improving at depth {move.depth} > {max_depth}")
            cur, d_cur = move, d_best

    # -- lifecycle -----------------------------------------------------------

    def freeze(self, depth):
        """Materialize the full ball B_depth and forbid going deeper.  After
        freezing the structure is immutable and safe for concurrent reads."""
        for v in self.ball(depth):
            if v.depth < depth:
                self.children(v)
            self.succ(v), self.pred(v)
            self.parents(v)
        self.frozen_depth = depth

    def path_to(self, v):
        """Child indices from the root to v (empty for the root)."""
        out = []
        while v.p_right is not None:
            out.append(v.index)
            v = v.p_right
        return out[::-1]

    def vertex_at(self, path):
        """Resolve a child-index path from the root; inverse of path_to."""
        v = self.root
        for i in path:
            if not 0 <= i < len(v._children):
                raise GridError(f"child index {i} out of range at depth "
                                f"{v.depth} (type {v.vtype.name})")
            v = self.child(v, i)
        return v


def new_grid(kind):
    """Fresh grid with the root and first ring materialized."""
    g = Grid(kind)
    g.ring(1)
    return g
