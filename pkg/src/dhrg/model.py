"""The discrete hyperbolic random graph model.

Vertices of a network are mapped onto grid vertices; each pair is an edge
with logistic probability p(d) = 1/(1 + e^((d-R)/(2T))) of its grid
distance d.  Everything here reduces to the two histograms
tally[d] (all pairs at distance d) and edgetally[d] (adjacent pairs at
distance d): the log-likelihood of an embedding, the fitted (R, T), the
nonparametric bound, and the local-search deltas.  All pair counts are
over unordered pairs, counted exactly once.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit

from . import hypgeom
from .grid import Grid, GridError
from .griddist import DistanceTallyCounter, grid_distance


class ModelError(Exception):
    pass


class FitBoundaryError(ModelError):
    """Optimizer ended on the domain boundary or tables are degenerate."""


@dataclass(frozen=True)
class DhrgParams:
    n: int
    D: int          # maximum grid depth of sampled vertices
    alpha: float    # radial density exponent: P(depth = d) ~ e^(alpha d)
    R: float        # logistic midpoint, in grid-distance units
    T: float        # temperature

    def __post_init__(self):
        if self.n < 1 or self.D < 1:
            raise ModelError("n and D must be at least 1")
        if not (self.alpha > 0 and self.T > 0 and self.R > 0):
            raise ModelError("alpha, R, T must be positive and finite")
        if not all(map(math.isfinite, (self.alpha, self.R, self.T))):
            raise ModelError("alpha, R, T must be positive and finite")


class NetworkGraph:
    """Simple undirected graph on vertices 0..n-1."""

    def __init__(self, n, edges):
        self.n = n
        seen = set()
        for a, b in edges:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise ModelError(f"bad edge ({a}, {b})")
            seen.add((a, b) if a < b else (b, a))
        self.edges = sorted(seen)
        self._adj = None

    @property
    def m(self):
        return len(self.edges)

    def adjacency(self):
        if self._adj is None:
            adj = [[] for _ in range(self.n)]
            for a, b in self.edges:
                adj[a].append(b)
                adj[b].append(a)
            self._adj = adj
        return self._adj

    def neighbors(self, v):
        return self.adjacency()[v]


@dataclass
class GridEmbedding:
    """Map from network vertices to grid vertices."""

    grid: Grid
    images: list  # GridVertex per network vertex

    @property
    def n(self):
        return len(self.images)

    @property
    def max_depth(self):
        return max((v.depth for v in self.images), default=0)


@dataclass
class ContinuousEmbedding:
    """Map from network vertices to polar coordinates, plus the parameters
    reported by the producing embedder."""

    coords: list  # PolarCoord per network vertex
    R: float
    T: float
    alpha: float

    @property
    def n(self):
        return len(self.coords)

    @property
    def max_radius(self):
        return max((c.r for c in self.coords), default=0.0)


@dataclass
class LikelihoodTables:
    tally: np.ndarray      # pairs at each grid distance
    edgetally: np.ndarray  # adjacent pairs at each grid distance

    def __post_init__(self):
        n = max(len(self.tally), len(self.edgetally), 1)
        self.tally = _padded(self.tally, n)
        self.edgetally = _padded(self.edgetally, n)
        if (self.edgetally < 0).any() or (self.edgetally > self.tally).any():
            raise ModelError("edgetally must satisfy 0 <= edgetally <= tally")

    @property
    def pair_count(self):
        return int(self.tally.sum())

    @property
    def edge_count(self):
        return int(self.edgetally.sum())


def _padded(a, n):
    a = np.asarray(a, np.int64)
    if len(a) < n:
        a = np.concatenate([a, np.zeros(n - len(a), np.int64)])
    return a


# -- edge probability ---------------------------------------------------------

def edge_probability(d, R, T):
    """Logistic connection probability 1/(1 + e^((d-R)/(2T)))."""
    return _expit((np.asarray(d, float) - R) / (2.0 * T))


def _expit(x):
    # expit(-x) computed in a branch that never overflows
    return np.exp(log_expit(-x))


def _log_p_terms(length, R, T):
    x = (np.arange(length) - R) / (2.0 * T)
    return log_expit(-x), log_expit(x)  # log p(d), log(1 - p(d))


def log_likelihood(tables: LikelihoodTables, R, T):
    """Log-likelihood of the tables under logistic p(d); each unordered
    pair contributes exactly once."""
    lp, l1p = _log_p_terms(len(tables.tally), R, T)
    non_edges = tables.tally - tables.edgetally
    return float(tables.edgetally @ lp + non_edges @ l1p)


def best_nonparametric(tables: LikelihoodTables):
    """Log-likelihood upper bound using the empirical rate per bucket
    (the best possible p(d), not necessarily logistic)."""
    t = tables.tally.astype(float)
    e = tables.edgetally.astype(float)
    out = 0.0
    for ti, ei in zip(t, e):
        if ti <= 0 or ei <= 0 and ei >= ti:
            continue
        if ei > 0:
            out += ei * math.log(ei / ti)
        if ei < ti:
            out += (ti - ei) * math.log1p(-ei / ti)
    return out


def trivial_likelihood(n, m):
    """Log-likelihood of the model where every pair is an edge with the
    global edge density."""
    pairs = n * (n - 1) // 2
    if not 0 <= m <= pairs:
        raise ModelError("need 0 <= m <= n(n-1)/2")
    if m == 0 or m == pairs:
        return 0.0
    q = m / pairs
    return m * math.log(q) + (pairs - m) * math.log1p(-q)


def placement_log_likelihood(emb: GridEmbedding, g: Grid):
    """Log-likelihood of the vertex placement: depth d with the empirical
    frequency q(d), uniform over the ring R_d."""
    if emb.n == 0:
        raise ModelError("empty embedding")
    depth_counts = {}
    for v in emb.images:
        depth_counts[v.depth] = depth_counts.get(v.depth, 0) + 1
    out = 0.0
    for d, cnt in depth_counts.items():
        out += cnt * (math.log(cnt / emb.n) - math.log(g.ring_size(d)))
    return out


# -- sampling and generation -----------------------------------------------------

def sample_vertex(g: Grid, alpha, D, rng, depth=None):
    """Random grid vertex: depth d with probability proportional to
    e^(alpha d) on [0, D] (or forced), then uniform over the ring R_d via
    a weighted root-to-ring descent."""
    if depth is None:
        weights = [math.exp(alpha * (d - D)) for d in range(D + 1)]
        u = rng.random() * sum(weights)
        depth = 0
        for w in weights:
            u -= w
            if u < 0:
                break
            depth += 1
        depth = min(depth, D)
    v = g.root
    for level in range(depth):
        remaining = depth - level - 1
        names = (v.vtype.child_types if v.p_right is not None
                 else g.spec.root_type.child_types)
        weights = [g.descendant_count(t, remaining) for t in names]
        pick = rng.randrange(sum(weights))  # exact, arbitrary precision
        for i, w in enumerate(weights):
            pick -= w
            if pick < 0:
                v = g.child(v, i)
                break
    return v


def _geometric(rng, p):
    """Number of Bernoulli(p) failures before the first success, plus one."""
    if p >= 1.0:
        return 1
    u = 1.0 - rng.random()  # in (0, 1]
    return int(math.log(u) / math.log1p(-p)) + 1


def generate_graph(g: Grid, params: DhrgParams, rng):
    """Sample a DHRG: n placed vertices, then for every pair at distance d
    an independent edge with probability p(d), realized by geometric skips
    over the per-distance pair buckets of an incremental tally."""
    images = [sample_vertex(g, params.alpha, params.D, rng)
              for _ in range(params.n)]
    counter = DistanceTallyCounter(g)
    hosts = {}  # grid uid -> network vertices living there, in add order
    edges = []
    for i, v in enumerate(images):
        if i:
            contribs = []
            hist = counter.tally(v, _contribs=contribs)
            by_d = {}
            for entry in contribs:
                by_d.setdefault(entry[0], []).append(entry)
            for d in sorted(by_d):
                entries = by_d[d]
                total = int(sum(e[1] for e in entries))
                p = float(edge_probability(d, params.R, params.T))
                j = _geometric(rng, p)
                while j <= total:
                    edges.append((i, _locate(counter, hosts, entries, j)))
                    j += _geometric(rng, p)
        counter.add(v, 1)
        hosts.setdefault(v.uid, []).append(i)
    return NetworkGraph(params.n, edges), GridEmbedding(g, images)


def _locate(counter, hosts, entries, j):
    """Map the j-th pair unit of one distance bucket back to its network
    vertex, via segment trace-back."""
    for _d, weight, seg, c, excluded in entries:
        if j <= weight:
            leaf, unit = counter.trace_unit(seg, c, int(j), excluded)
            return hosts[leaf.uid][unit - 1]
        j -= int(weight)
    raise ModelError("pair index outside the bucket")


# -- likelihood context: tables plus incremental move evaluation ----------------

def compute_tallies(emb: GridEmbedding, graph: NetworkGraph):
    """Exact distance histograms of an embedded graph: tally over all
    unordered pairs through the counter, edgetally per edge."""
    ctx = LikelihoodContext(emb, graph, R=1.0, T=1.0)
    return ctx.tables


class LikelihoodContext:
    """Loaded tally counter + tables for one embedding, supporting O(D^2 +
    D deg) what-if deltas for single-vertex moves and incremental updates
    when a move is applied."""

    def __init__(self, emb: GridEmbedding, graph: NetworkGraph, R, T):
        if emb.n != graph.n:
            raise ModelError("embedding and graph disagree on n")
        self.grid = emb.grid
        self.graph = graph
        self.images = list(emb.images)
        self.R, self.T = float(R), float(T)
        self.counter = DistanceTallyCounter(self.grid)
        size = 2 * max(emb.max_depth, 1) + self.grid.spec.offset_bound + 2
        tally = np.zeros(size, np.int64)
        for i, v in enumerate(self.images):
            if i:
                h = self.counter.tally(v)
                tally[:len(h)] += h
            self.counter.add(v, 1)
        self._edge_dist = {}
        edgetally = np.zeros(size, np.int64)
        for a, b in graph.edges:
            d = grid_distance(self.grid, self.images[a], self.images[b])
            self._edge_dist[(a, b)] = d
            edgetally[d] += 1
        self.tables = LikelihoodTables(tally, edgetally)

    def embedding(self):
        return GridEmbedding(self.grid, list(self.images))

    def log_likelihood(self, R=None, T=None):
        return log_likelihood(self.tables,
                              self.R if R is None else R,
                              self.T if T is None else T)

    def _pair_deltas(self, vi, w):
        """Tally/edgetally increments for remapping vertex vi to w."""
        if not 0 <= vi < self.graph.n:
            raise ModelError(f"vertex {vi} out of range")
        x = self.images[vi]
        old = self.counter.tally(x)
        new = self.counter.tally(w)
        d_xw = grid_distance(self.grid, w, x)
        moves = [((vi, u) if vi < u else (u, vi),
                  grid_distance(self.grid, w, self.images[u]))
                 for u in self.graph.neighbors(vi)]
        size = max(len(self.tables.tally), len(old), len(new), d_xw + 1,
                   max((d + 1 for _, d in moves), default=1))
        d_tally = np.zeros(size, np.int64)
        d_tally[:len(old)] -= old
        d_tally[0] += 1  # vi itself does not pair with vi
        d_tally[:len(new)] += new
        d_tally[d_xw] -= 1  # nor with its old spot
        d_edge = np.zeros(size, np.int64)
        for key, d_new in moves:
            d_edge[self._edge_dist[key]] -= 1
            d_edge[d_new] += 1
        return d_tally, d_edge, moves

    def delta_move(self, vi, w):
        """log L(mu') - log L(mu) for the single-vertex remap mu'(vi) = w;
        does not mutate anything."""
        if w is self.images[vi]:
            return 0.0
        d_tally, d_edge, _ = self._pair_deltas(vi, w)
        lp, l1p = _log_p_terms(len(d_tally), self.R, self.T)
        return float(d_edge @ lp + (d_tally - d_edge) @ l1p)

    def eval_moves(self, vi, candidates):
        """delta_move for several candidate targets, sharing the query at
        the current location (the expensive half)."""
        x = self.images[vi]
        old = self.counter.tally(x)
        old_edges = [self._edge_dist[(vi, u) if vi < u else (u, vi)]
                     for u in self.graph.neighbors(vi)]
        out = []
        for w in candidates:
            if w is x:
                out.append(0.0)
                continue
            new = self.counter.tally(w)
            d_xw = grid_distance(self.grid, w, x)
            new_edges = [grid_distance(self.grid, w, self.images[u])
                         for u in self.graph.neighbors(vi)]
            size = max(len(old), len(new), d_xw + 1,
                       max(old_edges, default=0) + 1,
                       max(new_edges, default=0) + 1)
            d_tally = np.zeros(size, np.int64)
            d_tally[:len(old)] -= old
            d_tally[0] += 1
            d_tally[:len(new)] += new
            d_tally[d_xw] -= 1
            d_edge = np.zeros(size, np.int64)
            for d in old_edges:
                d_edge[d] -= 1
            for d in new_edges:
                d_edge[d] += 1
            lp, l1p = _log_p_terms(size, self.R, self.T)
            out.append(float(d_edge @ lp + (d_tally - d_edge) @ l1p))
        return out

    def apply_move(self, vi, w):
        d_tally, d_edge, moves = self._pair_deltas(vi, w)
        x = self.images[vi]
        self.counter.add(x, -1)
        self.counter.add(w, 1)
        self.images[vi] = w
        size = len(d_tally)
        self.tables = LikelihoodTables(_padded(self.tables.tally, size) + d_tally,
                                       _padded(self.tables.edgetally, size) + d_edge)
        for key, d_new in moves:
            self._edge_dist[key] = d_new


def local_search(emb: GridEmbedding, graph: NetworkGraph, R, T,
                 max_iters=100, progress=None):
    """Greedy embedding improvement: sweep vertices in id order, move each
    to its best strictly-improving grid neighbor, stop after a sweep with
    no moves.  Returns (embedding, sweeps, logL trace); the trace is
    nondecreasing by construction and asserted."""
    ctx = LikelihoodContext(emb, graph, R, T)
    trace = [ctx.log_likelihood()]
    sweeps = 0
    for _ in range(max_iters):
        sweeps += 1
        moved = 0
        for vi in range(graph.n):
            cur = ctx.images[vi]
            candidates = sorted({w.uid: w for w in
                                 ctx.grid.neighbors(cur)}.values(),
                                key=lambda w: w.uid)
            best, best_delta = None, 1e-9  # strictly improving, noise floor
            for w, delta in zip(candidates, ctx.eval_moves(vi, candidates)):
                if delta > best_delta:  # ties resolve to the lowest uid
                    best, best_delta = w, delta
            if best is not None:
                ctx.apply_move(vi, best)
                moved += 1
        trace.append(ctx.log_likelihood())
        if trace[-1] < trace[-2] - 1e-6:
            raise ModelError("log-likelihood trace decreased")
        if progress is not None:
            progress(sweeps, moved, trace[-1])
        if moved == 0:
            break
    return ctx.embedding(), sweeps, trace


# -- parameter fitting -------------------------------------------------------------

def _golden_min(f, lo, hi, tol):
    """Golden-section minimum of a unimodal f on [lo, hi]."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


T_DOMAIN = (1e-3, 10.0)


def fit_logistic(tables: LikelihoodTables):
    """Maximize log_likelihood over (R, T) in [0, 2D] x [1e-3, 10] by
    coordinate descent with golden-section line searches from the best
    seeds of a coarse grid.  The returned point is certified by a central
    finite-difference gradient; degenerate tables raise FitBoundaryError.
    """
    nz = tables.tally > 0
    if not nz.any():
        raise FitBoundaryError("empty tables")
    if (tables.edgetally[nz] == 0).all():
        raise FitBoundaryError("no edges anywhere: optimum is at T -> 0")
    if (tables.edgetally[nz] == tables.tally[nz]).all():
        raise FitBoundaryError("all pairs are edges: optimum is at T -> 0")

    r_hi = float(len(tables.tally) - 1)
    t_lo, t_hi = T_DOMAIN

    def value(r, t):
        return log_likelihood(tables, r, t)

    grid_r = np.linspace(0.0, r_hi, 16)
    grid_t = np.geomspace(t_lo, t_hi, 16)
    scored = sorted(((value(r, t), r, t) for r in grid_r for t in grid_t),
                    reverse=True)
    best = (-math.inf, None, None)
    for _, r, t in scored[:5]:
        prev = -math.inf
        for _ in range(64):
            r = _golden_min(lambda x: -value(x, t), 0.0, r_hi, 1e-10 * r_hi)
            t = _golden_min(lambda x: -value(r, x), t_lo, t_hi, 1e-12)
            cur = value(r, t)
            if cur - prev <= 1e-10 * max(1.0, abs(cur)):
                break
            prev = cur
        if cur > best[0]:
            best = (cur, r, t)
    logl, r, t = best

    h_r, h_t = 1e-5 * max(1.0, r_hi), 1e-7
    grad_r = (value(r + h_r, t) - value(r - h_r, t)) / (2 * h_r)
    grad_t = (value(r, t + h_t) - value(r, t - h_t)) / (2 * h_t)
    scale = max(1.0, abs(logl))
    if max(abs(grad_r), abs(grad_t)) > 1e-6 * scale:
        if t - t_lo < 1e-6 or t_hi - t < 1e-6 or r < 1e-9 or r_hi - r < 1e-9:
            raise FitBoundaryError(
                f"optimum sits on the domain boundary: R={r:.6g} T={t:.6g}")
        raise ModelError("gradient certification failed at the fitted point")
    return r, t, logl


# -- conversions -----------------------------------------------------------------

def dhrg_to_hrg(emb: GridEmbedding, g: Grid, R=None, T=1.0, alpha=1.0):
    """Continuous embedding via the geometric realization of each image."""
    coords = [hypgeom.point_to_polar(g.embed(v)) for v in emb.images]
    if R is None:
        R = max((c.r for c in coords), default=0.0) or 1.0
    return ContinuousEmbedding(coords, R, T, alpha)


def hrg_to_dhrg(c: ContinuousEmbedding, g: Grid):
    """Grid embedding via the nearest grid vertex to each point; returns
    the embedding and a report with depth statistics and the expected
    parameter rescaling factor log(gamma)."""
    images = []
    for coord in c.coords:
        images.append(g.nearest_vertex(hypgeom.polar_to_point(coord)))
    depths = np.array([v.depth for v in images])
    report = {
        "log_gamma": math.log(g.growth_rate()),
        "depth_min": int(depths.min()),
        "depth_max": int(depths.max()),
        "depth_mean": float(depths.mean()),
    }
    return GridEmbedding(g, images), report


def continuous_log_likelihood(c: ContinuousEmbedding, graph: NetworkGraph,
                              R, T):
    """Direct O(n^2) log-likelihood over continuous distances (for checks
    against the grid pipeline at small n)."""
    pts = np.array([hypgeom.polar_to_point(x) for x in c.coords])
    signs = hypgeom.MINKOWSKI_SIGNS
    out = 0.0
    is_edge = set(graph.edges)
    for i in range(graph.n):
        d = np.arccosh(np.maximum(-(pts[i + 1:] @ (pts[i] * signs)), 1.0))
        x = (d - R) / (2.0 * T)
        lp, l1p = log_expit(-x), log_expit(x)
        for k, j in enumerate(range(i + 1, graph.n)):
            out += lp[k] if (i, j) in is_edge else l1p[k]
    return float(out)


# -- radial growth experiment -----------------------------------------------------

def conjecture_experiment(g: Grid, depths, samples_per_depth, rng):
    """Sample uniform ring vertices at each depth, measure the radius of
    their realization, and report the linear fit r ~ c1 d + c0, the
    variance growth, and a normality test of (r - c1 d - c0)/sqrt(d)."""
    from scipy import stats

    if len(depths) < 2:
        raise ModelError("need at least two depths")
    per_depth = {}
    for d in depths:
        if d == 0:
            per_depth[d] = np.zeros(samples_per_depth)
            continue
        rs = np.empty(samples_per_depth)
        for i in range(samples_per_depth):
            v = sample_vertex(g, 1.0, d, rng, depth=d)
            rs[i] = hypgeom.hyp_distance(hypgeom.ORIGIN, g.embed(v))
        per_depth[d] = rs
    all_d = np.concatenate([np.full(samples_per_depth, d) for d in depths])
    all_r = np.concatenate([per_depth[d] for d in depths])
    c1, c0 = np.polyfit(all_d, all_r, 1)
    means = {d: float(per_depth[d].mean()) for d in depths}
    variances = {d: float(per_depth[d].var()) for d in depths}
    var_slope = float(np.polyfit(list(variances), list(variances.values()),
                                 1)[0]) if len(depths) > 1 else 0.0
    positive = all_d > 0
    x = (all_r - c1 * all_d - c0)[positive] / np.sqrt(all_d[positive])
    stat, pvalue = stats.normaltest(x)
    return {
        "grid": g.spec.kind,
        "log_gamma": math.log(g.growth_rate()),
        "depths": list(depths),
        "samples_per_depth": samples_per_depth,
        "means": means,
        "variances": variances,
        "c1": float(c1),
        "c0": float(c0),
        "var_slope": var_slope,
        "normality_stat": float(stat),
        "normality_p": float(pvalue),
    }
