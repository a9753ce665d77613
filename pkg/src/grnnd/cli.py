"""Command-line interface: build, search, bench, gen.

CSV goes to stdout with a fixed header row; diagnostics (including the
effective seed of every randomized command) go to stderr.  Exit codes:
0 success, 1 usage/parameter error, 2 I/O or format error.  Build and
search timing excludes file I/O and kernel compilation: inputs are loaded
and kernels warmed before the clock starts, outputs are written after it
stops.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
import time

from . import backend as _backend
from .builder import build as build_grnnd
from .core import BuildParams, Dataset
from .errors import FormatError, GrnndError
from .io import generate, read_fvecs, read_graph, read_ivecs, write_fvecs, write_graph
from .search import SearchParams, brute_force_knn_batch, mean_recall, search_batch
from .sequential import build_seq


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _default_workers() -> int:
    env = os.environ.get("GRNND_WORKERS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _load_dataset(path: str) -> Dataset:
    ds = read_fvecs(path)
    ds.validate()
    return ds


def cmd_build(args) -> int:
    dataset = _load_dataset(args.input)
    params = BuildParams(
        S=args.S, R=args.R, T1=args.T1, T2=args.T2, rho=args.rho,
        seed=args.seed, workers=args.workers,
    )
    _note(f"seed={args.seed}")
    _backend.get_kernels().warmup()
    t0 = time.perf_counter()
    if args.algo == "grnnd":
        stats_log: list = []
        graph = build_grnnd(dataset, params, pair_order=args.pair_order, report_stats=stats_log)
        rejected = sum(s.rejected for s in stats_log)
    else:
        graph = build_seq(dataset, params)
        rejected = 0  # the sequential builder has no fixed-capacity inserts
    build_seconds = time.perf_counter() - t0
    write_graph(graph, args.output)
    deg = graph.degrees
    print("algo,n,dim,build_seconds,mean_degree,max_degree,rejected_inserts,seed")
    print(
        f"{args.algo},{dataset.num_points},{dataset.dim},{build_seconds:.6f},"
        f"{deg.mean():.4f},{deg.max()},{rejected},{args.seed}"
    )
    return 0


def cmd_search(args) -> int:
    graph = read_graph(args.graph)
    base = _load_dataset(args.base)
    queries = read_fvecs(args.queries)
    if queries.dim != base.dim:
        raise GrnndError(
            f"query dim {queries.dim} does not match base dim {base.dim}"
        )
    if args.gt:
        truth = read_ivecs(args.gt)
        if truth.shape[0] != queries.num_points:
            raise GrnndError("ground truth row count does not match query count")
        if truth.shape[1] < args.k:
            raise GrnndError(f"ground truth has fewer than k={args.k} columns")
        truth = truth[:, : args.k]
    else:
        _note("no --gt given; computing brute-force ground truth")
        truth = brute_force_knn_batch(base, queries.data, args.k, threads=args.threads)
    _backend.get_kernels().warmup()
    print("L,recall@k,QPS")
    for L in args.L:
        sp = SearchParams(L=L, k=args.k)
        # warm the search path once so QPS measures steady state
        search_batch(graph, base, queries.data[:1], sp, threads=args.threads)
        ids, elapsed = search_batch(graph, base, queries.data, sp, threads=args.threads)
        recall = mean_recall(ids, truth)
        qps = queries.num_points / elapsed if elapsed > 0 else float("inf")
        print(f"{L},{recall:.4f},{qps:.2f}")
    return 0


def cmd_bench(args) -> int:
    if args.input:
        dataset = _load_dataset(args.input)
    else:
        dataset = generate(args.n, args.dim, args.dist, seed=args.seed, clusters=args.clusters)
    _note(f"seed={args.seed}")
    if args.query_file:
        queries = read_fvecs(args.query_file).data
    else:
        queries = generate(
            args.queries, dataset.dim, args.dist, seed=args.seed + 1, clusters=args.clusters
        ).data
    truth = brute_force_knn_batch(dataset, queries, args.k, threads=args.workers)
    _backend.get_kernels().warmup()
    print(f"T1,T2,rho,build_seconds,recall@{args.k},QPS")
    for t1, t2, rho in itertools.product(args.T1, args.T2, args.rho):
        params = BuildParams(
            S=args.S, R=args.R, T1=t1, T2=t2, rho=rho, seed=args.seed, workers=args.workers
        )
        t0 = time.perf_counter()
        graph = build_grnnd(dataset, params)
        build_seconds = time.perf_counter() - t0
        sp = SearchParams(L=args.L, k=args.k)
        search_batch(graph, dataset, queries[:1], sp, threads=args.workers)
        ids, elapsed = search_batch(graph, dataset, queries, sp, threads=args.workers)
        recall = mean_recall(ids, truth)
        qps = queries.shape[0] / elapsed if elapsed > 0 else float("inf")
        print(f"{t1},{t2},{rho},{build_seconds:.6f},{recall:.4f},{qps:.2f}")
    return 0


def cmd_gen(args) -> int:
    dataset = generate(args.n, args.dim, args.dist, seed=args.seed, clusters=args.clusters)
    write_fvecs(dataset, args.output)
    _note(f"seed={args.seed}")
    _note(f"wrote {dataset.num_points} x {dataset.dim} vectors to {args.output}")
    return 0


def _build_parser() -> _Parser:
    p = _Parser(prog="grnnd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct a neighbor graph from an fvecs corpus")
    b.add_argument("--input", required=True)
    b.add_argument("--output", required=True)
    b.add_argument("--algo", choices=("grnnd", "seq"), default="grnnd")
    b.add_argument("--S", type=int, default=8)
    b.add_argument("--R", type=int, default=32)
    b.add_argument("--T1", type=int, default=3)
    b.add_argument("--T2", type=int, default=6)
    b.add_argument("--rho", type=float, default=0.6)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=_default_workers())
    b.add_argument(
        "--pair-order", choices=("disordered", "ascending"), default="disordered",
        help="debug: candidate pair visit order inside each round",
    )
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("search", help="recall/QPS sweep over a built graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--base", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--gt", default=None)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--L", type=int, action="append", default=None,
                   help="beam width; repeat the flag to sweep")
    s.add_argument("--threads", type=int, default=_default_workers())
    s.set_defaults(func=cmd_search)

    n = sub.add_parser("bench", help="parameter-sweep benchmark (T1 x T2 x rho)")
    n.add_argument("--input", default=None, help="fvecs corpus; generated when absent")
    n.add_argument("--n", type=int, default=10000)
    n.add_argument("--dim", type=int, default=16)
    n.add_argument("--dist", choices=("uniform", "gaussian", "clustered"), default="uniform")
    n.add_argument("--clusters", type=int, default=5)
    n.add_argument("--queries", type=int, default=100)
    n.add_argument("--query-file", default=None)
    n.add_argument("--T1", type=int, nargs="+", default=[1, 2, 3])
    n.add_argument("--T2", type=int, nargs="+", default=[6])
    n.add_argument("--rho", type=float, nargs="+", default=[0.6])
    n.add_argument("--S", type=int, default=8)
    n.add_argument("--R", type=int, default=32)
    n.add_argument("--L", type=int, default=64)
    n.add_argument("--k", type=int, default=10)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--workers", type=int, default=_default_workers())
    n.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="write a synthetic fvecs corpus")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--dist", choices=("uniform", "gaussian", "clustered"), default="uniform")
    g.add_argument("--clusters", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--output", required=True)
    g.set_defaults(func=cmd_gen)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "search" and args.L is None:
        args.L = [64]
    try:
        return args.func(args)
    except (FormatError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except GrnndError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
