"""Command-line driver: generation, distances, likelihood, local search,
conversions, the radial-growth experiment, and benchmarks.

Exit codes: 0 success, 2 validation error (bad inputs or files),
3 numeric failure (e.g. the optimizer ends on a domain boundary).
Machine output goes to stdout/files; progress goes to stderr.  Reports
are byte-identical for fixed seed and inputs.

Environment: DHRG_GRID sets the default grid kind, DHRG_THREADS caps the
compiled-kernel thread count.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
import time

from . import io as dio
from . import model
from .grid import GridError, new_grid
from .griddist import DistanceTallyCounter, grid_distance
from .io import FormatError, Report, write_report
from .model import (ContinuousEmbedding, DhrgParams, FitBoundaryError,
                    GridEmbedding, LikelihoodContext, ModelError)

GRID_KINDS = {"g7": "G7", "g67": "G67"}


def _grid_arg(parser):
    default = os.environ.get("DHRG_GRID", "g67").lower()
    parser.add_argument("--grid", choices=sorted(GRID_KINDS),
                        default=default,
                        help="grid kind (default from DHRG_GRID, else g67)")


def _open_grid(args):
    return new_grid(GRID_KINDS[args.grid])


def _preamble(args, grid, **extra):
    out = {"grid": grid.spec.kind}
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    out.update(extra)
    return out


def _emit(pairs):
    sys.stdout.write("\n".join(f"{k}\t{v!r}" if isinstance(v, float)
                               else f"{k}\t{v}" for k, v in pairs) + "\n")


# -- subcommands --------------------------------------------------------------

def cmd_gen(args):
    grid = _open_grid(args)
    depth = args.D if args.D is not None else int(math.ceil(args.R))
    params = DhrgParams(n=args.n, D=depth, alpha=args.alpha,
                        R=args.R, T=args.T)
    rng = random.Random(args.seed)
    graph, emb = model.generate_graph(grid, params, rng)
    dio.write_edge_list(args.out_graph, graph)
    dio.write_embedding(args.out_embedding, emb,
                        R=args.R, T=args.T, alpha=args.alpha)
    _emit([("grid", grid.spec.kind), ("seed", args.seed), ("n", graph.n),
           ("m", graph.m), ("D", depth), ("max_depth", emb.max_depth)])


def cmd_dist(args):
    grid = _open_grid(args)
    a = grid.vertex_at(dio.parse_path(args.path_a))
    b = grid.vertex_at(dio.parse_path(args.path_b))
    sys.stdout.write(f"{grid_distance(grid, a, b)}\n")


def cmd_likelihood(args):
    grid = _open_grid(args)
    graph, _ids = dio.read_edge_list(args.graph)
    pairs = [("grid", grid.spec.kind), ("n", graph.n), ("m", graph.m)]
    report = Report(preamble=_preamble(args, grid, n=graph.n, m=graph.m))
    if args.trivial:
        pairs.append(("trivial", model.trivial_likelihood(graph.n, graph.m)))
    if args.embedding is None:
        if args.fit or args.nonparametric:
            raise FormatError("--fit/--nonparametric need --embedding")
        if not args.trivial:
            raise FormatError("nothing to do without --embedding or --trivial")
        _emit(pairs)
        if args.out:
            report.preamble.update(dict(pairs[3:]))
            write_report(report, args.out)
        return
    emb = dio.read_embedding(args.embedding, grid)
    if isinstance(emb, ContinuousEmbedding):
        raise FormatError("likelihood needs a grid embedding; "
                          "run `convert --direction to-grid` first")
    hdr = _read_header(args.embedding)
    tables = model.compute_tallies(emb, graph)
    logl = model.log_likelihood(tables, hdr["R"], hdr["T"])
    pairs += [("R", hdr["R"]), ("T", hdr["T"]), ("logL", logl),
              ("placement", model.placement_log_likelihood(emb, grid))]
    if args.fit:
        r_fit, t_fit, l_fit = model.fit_logistic(tables)
        pairs += [("fit_R", r_fit), ("fit_T", t_fit), ("fit_logL", l_fit)]
    if args.nonparametric:
        pairs.append(("nonparametric", model.best_nonparametric(tables)))
    _emit(pairs)
    if args.out:
        report.preamble.update({k: v for k, v in pairs[3:]})
        report.add_table("tallies", ["d", "tally", "edgetally"],
                         [[d, int(t), int(e)] for d, (t, e) in
                          enumerate(zip(tables.tally, tables.edgetally))])
        write_report(report, args.out)


def _read_header(path):
    with open(path, "r", encoding="utf-8") as fh:
        n, r, t, alpha = fh.readline().split()
    return {"n": int(n), "R": float(r), "T": float(t), "alpha": float(alpha)}


def cmd_localsearch(args):
    grid = _open_grid(args)
    graph, _ids = dio.read_edge_list(args.graph)
    emb = dio.read_embedding(args.embedding, grid)
    if isinstance(emb, ContinuousEmbedding):
        raise FormatError("local search needs a grid embedding")
    hdr = _read_header(args.embedding)

    def progress(sweep, moved, logl):
        print(f"sweep {sweep}: moved {moved}, logL {logl:.3f}",
              file=sys.stderr)

    emb2, sweeps, trace = model.local_search(
        emb, graph, hdr["R"], hdr["T"], max_iters=args.max_iters,
        progress=progress)
    dio.write_embedding(args.out_embedding, emb2, R=hdr["R"], T=hdr["T"],
                        alpha=hdr["alpha"])
    if args.trace:
        rep = Report(preamble=_preamble(args, grid, R=hdr["R"], T=hdr["T"],
                                        sweeps=sweeps))
        rep.add_table("trace", ["sweep", "logL"],
                      [[i, float(v)] for i, v in enumerate(trace)])
        write_report(rep, args.trace)
    _emit([("grid", grid.spec.kind), ("sweeps", sweeps),
           ("initial_logL", trace[0]), ("final_logL", trace[-1])])


def cmd_convert(args):
    grid = _open_grid(args)
    emb = dio.read_embedding(args.embedding, grid)
    hdr = _read_header(args.embedding)
    log_gamma = math.log(grid.growth_rate())
    if args.direction == "to-grid":
        if isinstance(emb, GridEmbedding):
            raise FormatError("embedding is already a grid embedding")
        grid_emb, info = model.hrg_to_dhrg(emb, grid)
        dio.write_embedding(args.out, grid_emb, R=hdr["R"] / log_gamma,
                            T=hdr["T"] / log_gamma,
                            alpha=hdr["alpha"] * log_gamma)
        _emit([("grid", grid.spec.kind), ("log_gamma", log_gamma),
               ("depth_mean", info["depth_mean"]),
               ("depth_max", info["depth_max"])])
    else:
        if isinstance(emb, ContinuousEmbedding):
            raise FormatError("embedding is already continuous")
        cont = model.dhrg_to_hrg(emb, grid, R=hdr["R"] * log_gamma,
                                 T=hdr["T"] * log_gamma,
                                 alpha=hdr["alpha"] / log_gamma)
        dio.write_embedding(args.out, cont)
        _emit([("grid", grid.spec.kind), ("log_gamma", log_gamma),
               ("max_radius", cont.max_radius)])


def cmd_conjecture(args):
    grid = _open_grid(args)
    depths = [int(d) for d in args.depths.split(",")]
    rng = random.Random(args.seed)
    rep = model.conjecture_experiment(grid, depths, args.samples, rng)
    pairs = [("grid", grid.spec.kind), ("seed", args.seed),
             ("log_gamma", rep["log_gamma"]), ("c1", rep["c1"]),
             ("c0", rep["c0"]), ("var_slope", rep["var_slope"]),
             ("normality_stat", rep["normality_stat"]),
             ("normality_p", rep["normality_p"])]
    _emit(pairs)
    if args.out:
        out = Report(preamble=_preamble(args, grid, **dict(pairs[2:])))
        out.add_table("by_depth", ["depth", "mean_r", "var_r"],
                      [[d, rep["means"][d], rep["variances"][d]]
                       for d in depths])
        write_report(out, args.out)


def cmd_bench(args):
    grid = _open_grid(args)
    threads = os.environ.get("DHRG_THREADS")
    if threads:
        import numba
        numba.set_num_threads(max(1, int(threads)))
    rng = random.Random(args.seed)
    rows = []
    if args.suite == "dist":
        for depth in (8, 12, 16):
            vs = [model.sample_vertex(grid, 0.9, depth, rng)
                  for _ in range(400)]
            t0 = time.perf_counter()
            n = 0
            for i in range(0, len(vs) - 1, 2):
                grid_distance(grid, vs[i], vs[i + 1])
                n += 1
            rows.append([depth, n, (time.perf_counter() - t0) / n])
        columns = ["depth", "queries", "sec_per_query"]
    elif args.suite == "tally":
        for depth in (8, 16):
            ctr = DistanceTallyCounter(grid)
            vs = [model.sample_vertex(grid, 0.9, depth, rng)
                  for _ in range(300)]
            t0 = time.perf_counter()
            for v in vs:
                ctr.add(v, 1)
            t_add = (time.perf_counter() - t0) / len(vs)
            t0 = time.perf_counter()
            for v in vs[:100]:
                ctr.tally(v)
            rows.append([depth, t_add, (time.perf_counter() - t0) / 100])
        columns = ["depth", "sec_per_add", "sec_per_tally"]
    else:
        for n in (300, 1000):
            params = DhrgParams(n=n, D=10, alpha=0.75, R=7.5, T=0.6)
            t0 = time.perf_counter()
            graph, _ = model.generate_graph(grid, params, rng)
            rows.append([n, graph.m, time.perf_counter() - t0])
        columns = ["n", "m", "seconds"]
    rep = Report(preamble=_preamble(args, grid, suite=args.suite))
    rep.add_table("bench", columns, rows)
    sys.stdout.write(write_report(rep))


# -- argument wiring ---------------------------------------------------------------

def build_parser():
    top = argparse.ArgumentParser(
        prog="dhrg",
        description="Hyperbolic-grid embeddings of networks: generate, "
                    "measure, fit, and improve.")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a random graph and embedding")
    _grid_arg(p)
    p.add_argument("--n", type=int, required=True, help="vertex count")
    p.add_argument("--alpha", type=float, required=True,
                   help="radial density exponent")
    p.add_argument("--R", type=float, required=True, help="logistic midpoint")
    p.add_argument("--T", type=float, required=True, help="temperature")
    p.add_argument("--D", type=int, default=None,
                   help="max depth (default: ceil(R))")
    p.add_argument("--seed", type=int, required=True, help="rng seed")
    p.add_argument("--out-graph", required=True, help="edge list output")
    p.add_argument("--out-embedding", required=True,
                   help="grid embedding output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dist", help="distance between two grid vertices")
    _grid_arg(p)
    p.add_argument("--path-a", required=True,
                   help="dot-separated child path ('' = root)")
    p.add_argument("--path-b", required=True, help="second path")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("likelihood", help="log-likelihood of an embedding")
    _grid_arg(p)
    p.add_argument("--graph", required=True, help="edge list input")
    p.add_argument("--embedding", default=None, help="embedding input")
    p.add_argument("--fit", action="store_true",
                   help="also fit the best (R, T)")
    p.add_argument("--nonparametric", action="store_true",
                   help="also print the nonparametric bound")
    p.add_argument("--trivial", action="store_true",
                   help="also print the density-only model value")
    p.add_argument("--out", default=None, help="write a full report here")
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("localsearch", help="improve an embedding in place")
    _grid_arg(p)
    p.add_argument("--graph", required=True, help="edge list input")
    p.add_argument("--embedding", required=True, help="grid embedding input")
    p.add_argument("--max-iters", type=int, default=100,
                   help="sweep limit (default 100)")
    p.add_argument("--seed", type=int, default=None,
                   help="recorded in reports (the search is deterministic)")
    p.add_argument("--out-embedding", required=True,
                   help="improved embedding output")
    p.add_argument("--trace", default=None,
                   help="write the per-sweep logL trace here")
    p.set_defaults(func=cmd_localsearch)

    p = sub.add_parser("convert",
                       help="convert between embedding representations")
    _grid_arg(p)
    p.add_argument("--direction", choices=("to-grid", "to-continuous"),
                   required=True, help="conversion direction")
    p.add_argument("--embedding", required=True, help="embedding input")
    p.add_argument("--out", required=True, help="converted embedding output")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("conjecture",
                       help="radius-versus-depth growth experiment")
    _grid_arg(p)
    p.add_argument("--depths", default="10,20,40",
                   help="comma-separated depths (default 10,20,40)")
    p.add_argument("--samples", type=int, default=10000,
                   help="samples per depth (default 10000)")
    p.add_argument("--seed", type=int, required=True, help="rng seed")
    p.add_argument("--out", default=None, help="write a full report here")
    p.set_defaults(func=cmd_conjecture)

    p = sub.add_parser("bench", help="timing tables")
    _grid_arg(p)
    p.add_argument("--suite", choices=("dist", "tally", "gen"),
                   required=True, help="what to time")
    p.add_argument("--seed", type=int, default=0, help="rng seed")
    p.set_defaults(func=cmd_bench)
    return top


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except FitBoundaryError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (FormatError, GridError, ModelError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
