#!/usr/bin/env python3
"""Compare the numba kernels against the pure-numpy fallback.

Times graph construction (both builders), brute-force ground truth, and
greedy search on the same synthetic corpus under each backend, and prints
the speedup column.  The numpy fallback is exercised at a reduced size by
default; pass --n to override.

Usage:
    python3 benchmarks/compare_backends.py [--n 2000] [--dim 16] [--workers N]
"""

import argparse
import time

import numpy as np

import grnnd


def run_backend(name, ds, queries, params, sp):
    grnnd.set_backend(name)
    grnnd.backend.get_kernels().warmup()
    timings = {}

    t0 = time.perf_counter()
    graph = grnnd.build(ds, params)
    timings["build (parallel)"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    grnnd.build_seq(ds, params)
    timings["build (sequential)"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    truth = grnnd.brute_force_knn_batch(ds, queries, sp.k, threads=params.workers)
    timings["brute force"] = time.perf_counter() - t0

    grnnd.search_batch(graph, ds, queries[:1], sp, threads=params.workers)  # warm path
    ids, elapsed = grnnd.search_batch(graph, ds, queries, sp, threads=params.workers)
    timings["search batch"] = elapsed

    recall = grnnd.mean_recall(ids, truth)
    grnnd.set_backend(None)
    return timings, recall


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--L", type=int, default=64)
    args = ap.parse_args()

    ds = grnnd.generate(args.n, args.dim, "uniform", seed=args.seed)
    queries = grnnd.generate(args.queries, args.dim, "uniform", seed=args.seed + 1).data
    params = grnnd.BuildParams(
        S=8, R=min(32, args.n - 1), T1=3, T2=6, rho=0.6, seed=args.seed, workers=args.workers
    )
    sp = grnnd.SearchParams(L=args.L, k=10)

    print(f"corpus: n={args.n} dim={args.dim}, queries={args.queries}, workers={args.workers}")
    nb, rec_nb = run_backend("numba", ds, queries, params, sp)
    np_, rec_np = run_backend("numpy", ds, queries, params, sp)

    width = max(len(k) for k in nb)
    print(f"{'stage':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for key in nb:
        sp_x = np_[key] / nb[key] if nb[key] > 0 else float("inf")
        print(f"{key:<{width}}  {nb[key]:>9.3f}s  {np_[key]:>9.3f}s  {sp_x:>7.1f}x")
    print(f"recall@10 at L={args.L}: numba {rec_nb:.4f}, numpy {rec_np:.4f}")


if __name__ == "__main__":
    main()
