"""Greedy beam search, brute-force ground truth, and recall.

Search keeps a candidate list of capacity L ordered by (distance, id),
repeatedly expands the nearest unexpanded entry, and stops when the whole
list has been expanded.  Every visited vertex is offered to the list, so
its top k equals the k nearest visited vertices.  Queries are independent
of each other: the graph and dataset are shared read-only and each query
owns its visited bitset.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import backend as _backend
from .core import Dataset, Graph
from .errors import DimensionMismatch, EmptyGraph, LengthMismatch, ParamError
from .rng import MASK64, hash4

_STREAM_ENTRY = 0x5EED


@dataclass(frozen=True)
class SearchParams:
    """L: candidate list capacity (beam width), k: result count.

    entry selects the start vertex: a fixed id (default 0), or None for a
    seeded random entry per query.
    """

    L: int
    k: int
    entry: int | None = 0
    seed: int = 0

    def validate(self, n: int) -> None:
        if self.k < 1:
            raise ParamError("k >= 1")
        if self.L < self.k:
            raise ParamError("L >= k")
        if self.entry is not None and not (0 <= self.entry < n):
            raise ParamError("entry vertex out of range")


def _entries_for(sp: SearchParams, n: int, nq: int) -> np.ndarray:
    if sp.entry is not None:
        return np.full(nq, sp.entry, dtype=np.int64)
    qi = np.arange(nq, dtype=np.uint64)
    from .rng import hash4_vec

    return (hash4_vec(sp.seed & MASK64, _STREAM_ENTRY, qi, 0) % np.uint64(n)).astype(
        np.int64
    )


def _check_query(dataset: Dataset, q: np.ndarray) -> np.ndarray:
    q = np.ascontiguousarray(q, dtype=np.float32)
    if q.ndim == 1:
        qdim = q.shape[0]
    else:
        qdim = q.shape[1]
    if qdim != dataset.dim:
        raise DimensionMismatch(
            f"query dimension {qdim} does not match dataset dimension {dataset.dim}"
        )
    return q


def greedy_search(graph: Graph, dataset: Dataset, query, sp: SearchParams) -> np.ndarray:
    """The k nearest visited ids for one query, ascending by distance."""
    if graph.num_vertices == 0:
        raise EmptyGraph("cannot search an empty graph")
    if graph.num_vertices != dataset.num_points:
        raise DimensionMismatch("graph and dataset disagree on the number of points")
    sp.validate(graph.num_vertices)
    q = _check_query(dataset, np.asarray(query))
    entry = sp.entry
    if entry is None:
        entry = int(hash4(sp.seed & MASK64, _STREAM_ENTRY, 0, 0) % graph.num_vertices)
    kern = _backend.get_kernels()
    ids, _ = kern.greedy_search_single(
        graph.offsets, graph.neighbor_ids, dataset.data, q, int(sp.L), int(sp.k), entry
    )
    return ids


def search_batch(
    graph: Graph, dataset: Dataset, queries, sp: SearchParams, threads: int = 1
) -> tuple[np.ndarray, float]:
    """Run a query batch; returns (ids matrix, wall seconds for the batch).

    Rows are padded with -1 when fewer than k vertices were reachable.
    """
    if graph.num_vertices == 0:
        raise EmptyGraph("cannot search an empty graph")
    if graph.num_vertices != dataset.num_points:
        raise DimensionMismatch("graph and dataset disagree on the number of points")
    sp.validate(graph.num_vertices)
    q = _check_query(dataset, np.asarray(queries))
    if q.ndim == 1:
        q = q.reshape(1, -1)
    entries = _entries_for(sp, graph.num_vertices, q.shape[0])
    kern = _backend.get_kernels()
    from .builder import _WorkerThreads

    with _WorkerThreads(threads):
        t0 = time.perf_counter()
        ids, _, _ = kern.greedy_search_batch(
            graph.offsets, graph.neighbor_ids, dataset.data, q, int(sp.L), int(sp.k), entries
        )
        elapsed = time.perf_counter() - t0
    return ids, elapsed


def brute_force_knn(dataset: Dataset, query, k: int) -> np.ndarray:
    """Exact k nearest ids for one query, ties broken by ascending id."""
    if k < 1 or k > dataset.num_points:
        raise ParamError("k must satisfy 1 <= k <= N")
    q = _check_query(dataset, np.asarray(query))
    if q.ndim == 1:
        q = q.reshape(1, -1)
    out = np.empty((q.shape[0], k), dtype=np.int32)
    _backend.get_kernels().brute_force(dataset.data, q, k, out)
    return out[0] if out.shape[0] == 1 and np.asarray(query).ndim == 1 else out


def brute_force_knn_batch(dataset: Dataset, queries, k: int, threads: int = 1) -> np.ndarray:
    """Ground-truth ids for a query batch."""
    if k < 1 or k > dataset.num_points:
        raise ParamError("k must satisfy 1 <= k <= N")
    q = _check_query(dataset, np.asarray(queries))
    if q.ndim == 1:
        q = q.reshape(1, -1)
    out = np.empty((q.shape[0], k), dtype=np.int32)
    from .builder import _WorkerThreads

    with _WorkerThreads(threads):
        _backend.get_kernels().brute_force(dataset.data, q, k, out)
    return out


def recall_at_k(retrieved, truth) -> float:
    """|retrieved intersect truth| / k for two duplicate-free id lists."""
    r = np.asarray(retrieved).ravel()
    t = np.asarray(truth).ravel()
    if r.shape[0] != t.shape[0]:
        raise LengthMismatch(f"length mismatch: {r.shape[0]} vs {t.shape[0]}")
    k = r.shape[0]
    return len(set(r.tolist()) & set(t.tolist())) / k


def mean_recall(retrieved: np.ndarray, truth: np.ndarray) -> float:
    """Average recall_at_k over the rows of two (nq, k) id matrices."""
    return float(
        np.mean([recall_at_k(retrieved[i], truth[i]) for i in range(retrieved.shape[0])])
    )
