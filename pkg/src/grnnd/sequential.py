"""Sequential baseline builder.

Vertices refine one at a time in id order; each refinement sorts the
candidate list ascending by distance, deduplicates, truncates to R, then
accepts greedily: the closest candidate always, every later candidate
only if no already-accepted neighbor lies at or within the candidate's
own distance to the owner.  A rejected candidate is redirected: it is
appended (unbounded, capacity is re-enforced at the target's next
refinement) to the first accepted neighbor that excluded it, paired with
their mutual distance.  Full reverse edges are appended after every outer
iteration except the last.

This builder is the quality oracle for the parallel one; it is strictly
single-threaded and bit-deterministic under a fixed seed.  Distances are
squared Euclidean, as everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend as _backend
from .builder import effective_params
from .core import BuildParams, Dataset, Graph, validate_params
from .errors import ParamError
from .rng import MASK64


@dataclass
class CandidateList:
    """One vertex's candidates: an accepted prefix plus pending appends.

    ``ids``/``dists`` hold the accepted set from the owner's most recent
    refinement, sorted ascending by (dist, id) and duplicate-free with
    length <= R.  ``pending_*`` hold redirects and reverse edges that
    arrived afterwards; they join the pool at the next refinement.
    """

    owner: int
    ids: np.ndarray
    dists: np.ndarray
    pending_ids: list[int] = field(default_factory=list)
    pending_dists: list[float] = field(default_factory=list)

    @property
    def accepted_len(self) -> int:
        return int(self.ids.shape[0])

    def all_ids(self) -> np.ndarray:
        return np.concatenate([self.ids, np.asarray(self.pending_ids, dtype=np.int32)])

    def all_dists(self) -> np.ndarray:
        return np.concatenate(
            [self.dists, np.asarray(self.pending_dists, dtype=np.float32)]
        )


@dataclass
class SequentialState:
    data: np.ndarray
    params: BuildParams
    lists: list[CandidateList]


def _sort_dedupe_truncate(ids, dists, cap):
    """Ascending (dist, id) order, first occurrence per id, top cap."""
    ids = np.asarray(ids, dtype=np.int32)
    dists = np.asarray(dists, dtype=np.float32)
    order = np.lexsort((ids, dists))
    ids, dists = ids[order], dists[order]
    _, first = np.unique(ids, return_index=True)
    keep = np.sort(first)[:cap]
    return ids[keep], dists[keep]


def update_neighbors_seq(
    candidates: CandidateList, dataset: Dataset, cap: int
) -> tuple[CandidateList, list[tuple[int, int, float]]]:
    """Refine one vertex's candidate list.

    Returns the refined list (pending queue empty) and the redirect
    insertions as (target vertex, redirected id, mutual distance).
    """
    ids, dists = _sort_dedupe_truncate(candidates.all_ids(), candidates.all_dists(), cap)
    k = ids.shape[0]
    kern = _backend.get_kernels()
    acc_ids = np.empty(k, dtype=np.int32)
    acc_dists = np.empty(k, dtype=np.float32)
    red_tgt = np.empty(k, dtype=np.int32)
    red_id = np.empty(k, dtype=np.int32)
    red_dist = np.empty(k, dtype=np.float32)
    na, nr = kern.refine_accept_loop(
        dataset.data, ids, dists, acc_ids, acc_dists, red_tgt, red_id, red_dist
    )
    refined = CandidateList(
        owner=candidates.owner, ids=acc_ids[:na].copy(), dists=acc_dists[:na].copy()
    )
    redirects = [
        (int(red_tgt[i]), int(red_id[i]), float(red_dist[i])) for i in range(nr)
    ]
    return refined, redirects


def init_seq(dataset: Dataset, params: BuildParams) -> SequentialState:
    """S random initial neighbors per vertex, same RNG streams as the
    parallel builder."""
    dataset.validate()
    n = dataset.num_points
    validate_params(params, n)
    if params.S > n - 1:
        raise ParamError("S <= N-1")
    kern = _backend.get_kernels()
    ids = np.full((n, params.S), -1, dtype=np.int32)
    fail = np.zeros(1, dtype=np.int64)
    kern.sample_initial(n, params.S, np.uint64(params.seed & MASK64), ids, fail)
    if fail[0]:  # pragma: no cover
        raise RuntimeError("initial neighbor sampling did not converge")
    dists = np.empty((n, params.S), dtype=np.float32)
    kern.init_dists(dataset.data, ids, dists)
    lists = []
    for v in range(n):
        si, sd = _sort_dedupe_truncate(ids[v], dists[v], params.R)
        lists.append(CandidateList(owner=v, ids=si, dists=sd))
    return SequentialState(data=dataset.data, params=params, lists=lists)


def run_inner_round(state: SequentialState, dataset: Dataset) -> None:
    """Refine every vertex in id order; redirects land immediately, so
    later vertices see earlier vertices' decisions within the round."""
    cap = state.params.R
    for v in range(len(state.lists)):
        refined, redirects = update_neighbors_seq(state.lists[v], dataset, cap)
        state.lists[v] = refined
        for tgt, rid, rdist in redirects:
            state.lists[tgt].pending_ids.append(rid)
            state.lists[tgt].pending_dists.append(rdist)


def add_reverse_edges(state: SequentialState) -> None:
    """Append n -> v (same distance) for every accepted edge v -> n."""
    for cl in state.lists:
        for nid, d in zip(cl.ids.tolist(), cl.dists.tolist()):
            state.lists[nid].pending_ids.append(cl.owner)
            state.lists[nid].pending_dists.append(d)


def finalize_seq(state: SequentialState) -> Graph:
    """Emit the accepted prefixes (already sorted ascending) as a graph."""
    counts = np.array([cl.accepted_len for cl in state.lists], dtype=np.int64)
    offsets = np.zeros(len(state.lists) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(counts)
    neighbor_ids = (
        np.concatenate([cl.ids for cl in state.lists])
        if state.lists
        else np.zeros(0, dtype=np.int32)
    )
    graph = Graph(
        num_vertices=len(state.lists),
        offsets=offsets,
        neighbor_ids=neighbor_ids,
        max_degree_bound=state.params.R,
    )
    graph.validate(state.params.R)
    return graph


def build_seq(dataset: Dataset, params: BuildParams) -> Graph:
    """Full sequential build: T1 outer iterations of T2 refinement rounds,
    reverse edges between outer iterations."""
    params = effective_params(params, dataset.num_points)
    state = init_seq(dataset, params)
    for t1 in range(1, params.T1 + 1):
        for _ in range(params.T2):
            run_inner_round(state, dataset)
        if t1 != params.T1:
            add_reverse_edges(state)
    return finalize_seq(state)
