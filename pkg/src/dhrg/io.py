"""File formats: edge lists, embeddings, and experiment reports.

Edge lists are SNAP-style: one whitespace-separated id pair per line,
'#' comments.  External ids are remapped to dense [0, n) and the mapping
is kept for round trips.

Embedding files share one header line `n R T alpha`; then one line per
vertex.  Continuous: `id r phi` (three fields).  Discrete: `id path`
where the path is the dot-separated child-index walk from the root
(empty for the root itself) -- paths are precision-free and stable across
grid versions, unlike coordinates.  Numbers are written with shortest
round-trip precision, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .hypgeom import PolarCoord
from .model import ContinuousEmbedding, GridEmbedding, ModelError, NetworkGraph


class FormatError(Exception):
    pass


def _lines(source):
    if hasattr(source, "read"):
        return source.read().splitlines()
    with open(source, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _write(dest, text):
    if hasattr(dest, "write"):
        dest.write(text)
        return
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(text)


# -- edge lists ------------------------------------------------------------------

def read_edge_list(source):
    """Parse an edge list into a simple undirected graph.

    Returns (graph, ids) where ids[i] is the external id of dense vertex
    i, in first-seen order.  Duplicate edges, reversed duplicates and
    self-loops are collapsed; malformed lines raise with their number.
    """
    ids = []
    dense = {}
    edges = set()

    def intern(token):
        i = dense.get(token)
        if i is None:
            i = dense[token] = len(ids)
            ids.append(token)
        return i

    for ln, line in enumerate(_lines(source), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise FormatError(f"line {ln}: expected two ids, got {body!r}")
        a, b = intern(parts[0]), intern(parts[1])
        if a != b:
            edges.add((a, b) if a < b else (b, a))
    return NetworkGraph(len(ids), sorted(edges)), ids


def write_edge_list(dest, graph, ids=None):
    ids = ids or list(range(graph.n))
    out = [f"{ids[a]} {ids[b]}" for a, b in graph.edges]
    _write(dest, "\n".join(out) + ("\n" if out else ""))


# -- embeddings ------------------------------------------------------------------

def parse_path(token):
    """Dot-separated child indices; empty string means the root."""
    if token == "":
        return []
    try:
        return [int(x) for x in token.split(".")]
    except ValueError:
        raise FormatError(f"bad grid path {token!r}") from None


def format_path(path):
    return ".".join(str(i) for i in path)


def read_embedding(source, grid):
    """Read either embedding variant, validated against the header.

    Line shape decides the variant: three fields is continuous
    `id r phi`, one or two fields is a grid path.
    """
    lines = _lines(source)
    if not lines:
        raise FormatError("empty embedding file")
    head = lines[0].split()
    if len(head) != 4:
        raise FormatError("header must be: n R T alpha")
    try:
        n = int(head[0])
        r_emb, t_emb, alpha = (float(x) for x in head[1:])
    except ValueError:
        raise FormatError("header must be: n R T alpha") from None

    seen = {}
    kind = None
    for ln, line in enumerate(lines[1:], 2):
        body = line.split("#", 1)[0].rstrip()
        if not body.strip():
            continue
        parts = body.split()
        this = "polar" if len(parts) == 3 else "grid"
        if len(parts) > 3:
            raise FormatError(f"line {ln}: too many fields")
        if kind is None:
            kind = this
        elif kind != this:
            raise FormatError(f"line {ln}: mixed embedding variants")
        try:
            vid = int(parts[0])
        except ValueError:
            raise FormatError(f"line {ln}: bad vertex id {parts[0]!r}") from None
        if not 0 <= vid < n:
            raise FormatError(f"line {ln}: vertex {vid} outside [0, {n})")
        if vid in seen:
            raise FormatError(f"line {ln}: vertex {vid} appears twice")
        if this == "polar":
            r, phi = float(parts[1]), float(parts[2])
            if r > r_emb + 1e-9:
                raise FormatError(f"line {ln}: r={r} exceeds header R={r_emb}")
            seen[vid] = PolarCoord(r, phi % (2 * math.pi))
        else:
            path = parse_path(parts[1]) if len(parts) == 2 else []
            try:
                seen[vid] = grid.vertex_at(path)
            except Exception as exc:
                raise FormatError(f"line {ln}: {exc}") from None
    missing = [v for v in range(n) if v not in seen]
    if missing:
        raise FormatError(f"vertices missing from embedding: {missing[:5]}...")
    values = [seen[v] for v in range(n)]
    if kind == "polar":
        return ContinuousEmbedding(values, r_emb, t_emb, alpha)
    return GridEmbedding(grid, values)


def write_embedding(dest, emb, R=None, T=None, alpha=None):
    """Write either embedding variant with a `n R T alpha` header."""
    if isinstance(emb, ContinuousEmbedding):
        R = emb.R if R is None else R
        T = emb.T if T is None else T
        alpha = emb.alpha if alpha is None else alpha
        rows = [f"{i} {c.r!r} {c.phi!r}" for i, c in enumerate(emb.coords)]
        n = emb.n
    elif isinstance(emb, GridEmbedding):
        R = float(emb.max_depth) if R is None else R
        T = 1.0 if T is None else T
        alpha = 1.0 if alpha is None else alpha
        rows = [f"{i} {format_path(emb.grid.path_to(v))}".rstrip()
                for i, v in enumerate(emb.images)]
        n = emb.n
    else:
        raise ModelError(f"not an embedding: {type(emb).__name__}")
    head = f"{n} {float(R)!r} {float(T)!r} {float(alpha)!r}"
    _write(dest, "\n".join([head] + rows) + "\n")


# -- reports -----------------------------------------------------------------------

@dataclass
class Report:
    """Key-value preamble plus named column tables; serializes to
    tab-separated text, byte-stable for identical content."""

    preamble: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)  # (name, columns, rows)

    def add_table(self, name, columns, rows):
        self.tables.append((name, list(columns), [list(r) for r in rows]))


def _cell(x):
    if isinstance(x, float):
        return repr(x)  # shortest round-trip form
    return str(x)


def write_report(report, dest=None):
    out = [f"{k}\t{_cell(v)}" for k, v in report.preamble.items()]
    for name, columns, rows in report.tables:
        out.append("")
        out.append(f"[{name}]")
        out.append("\t".join(columns))
        out.extend("\t".join(_cell(x) for x in row) for row in rows)
    text = "\n".join(out) + "\n"
    if dest is not None:
        _write(dest, text)
    return text


def parse_report(source):
    lines = _lines(source)
    rep = Report()
    i = 0
    while i < len(lines) and lines[i] and not lines[i].startswith("["):
        key, _, value = lines[i].partition("\t")
        rep.preamble[key] = value
        i += 1
    while i < len(lines):
        if not lines[i]:
            i += 1
            continue
        if not (lines[i].startswith("[") and lines[i].endswith("]")):
            raise FormatError(f"line {i + 1}: expected a [table] header")
        name = lines[i][1:-1]
        i += 1
        columns = lines[i].split("\t")
        i += 1
        rows = []
        while i < len(lines) and lines[i]:
            rows.append(lines[i].split("\t"))
            i += 1
        rep.add_table(name, columns, rows)
    return rep
