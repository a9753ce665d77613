"""Parallel graph builder with disordered pair propagation.

Round structure (one inner round):

1. Pair phase, parallel over vertices.  Each vertex walks all candidate
   pairs of its read buffer in a per-vertex randomized order.  A pair
   whose mutual distance is strictly below the larger of the two stored
   distances redirects its farther member toward the closer one: the
   farther slot is tombstoned in place and an insert message
   (target, id, distance) is queued.  Surviving entries are queued for
   the owner's own write buffer.
2. Apply phase.  Messages are grouped by target pool and applied by
   exactly one worker per pool using the three-stage insert (dedupe,
   claim free slot, replace farthest when closer).  Grouping preserves
   a single global message order, so builds are bit-reproducible for
   any worker count, and per-pool application is trivially atomic.
3. Read buffers are cleared and the two buffers swap roles.

Between outer iterations (except after the last), reverse edges are
queued for each vertex's ceil(rho*k) closest neighbors, applied, and then
every vertex re-merges its own read entries - same lifecycle as above.

Pool distances are squared Euclidean (see grnnd.metric).
"""

from __future__ import annotations

import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal, NamedTuple

import numpy as np

from . import backend as _backend
from .core import TOMBSTONE, BuildParams, Dataset, DoubleBufferPool, Graph, validate_params
from .errors import ParamError, SelfInsert
from .rng import MASK64, STREAM_ROUND_BASE

PairOrder = Literal["disordered", "ascending"]

_ORDER_CODES = {"disordered": 0, "ascending": 1}


class Redirect(NamedTuple):
    """Outcome of the pair rule: indices (0 or 1) into the evaluated pair."""

    far: int
    close: int


def rng_redirect_check(d_vi: float, d_vj: float, d_ij: float) -> Redirect | None:
    """Apply the redirect rule to one candidate pair of some vertex v.

    Returns None (keep both) unless ``d_ij`` is strictly below
    ``max(d_vi, d_vj)``, in which case the farther member is redirected
    toward the closer one.  An exact ``d_vi == d_vj`` tie treats the
    first member as the closer.  Works on squared distances too since
    squaring is monotone.
    """
    if d_ij < max(d_vi, d_vj):
        return Redirect(far=1, close=0) if d_vj >= d_vi else Redirect(far=0, close=1)
    return None


def cooperative_insert(
    owner: int,
    write_ids: np.ndarray,
    write_dists: np.ndarray,
    count: int,
    candidate_id: int,
    candidate_dist: float,
) -> tuple[str, int]:
    """Three-stage insert into one pool's write buffer (reference path).

    Returns (status, new_count) with status one of 'inserted',
    'duplicate', 'replaced', 'rejected'.  The caller owns concurrency:
    calls racing on one pool must be serialized (the build pipeline
    guarantees this by assigning each pool to a single worker).
    """
    if candidate_id == owner:
        raise SelfInsert(f"pool {owner} asked to insert its own owner")
    cap = write_ids.shape[0]
    for s in range(count):  # stage 1: dedupe
        if write_ids[s] == candidate_id:
            return "duplicate", count
    if count < cap:  # stage 2: claim a free slot
        write_ids[count] = candidate_id
        write_dists[count] = candidate_dist
        return "inserted", count + 1
    mi = 0  # stage 3: replace the farthest entry when strictly closer
    for s in range(1, cap):
        if write_dists[s] > write_dists[mi]:
            mi = s
    if candidate_dist < write_dists[mi]:
        write_ids[mi] = candidate_id
        write_dists[mi] = np.float32(candidate_dist)
        return "replaced", count
    return "rejected", count


@dataclass
class RoundStats:
    """Bookkeeping for one lifecycle step (update or reverse round)."""

    kind: str
    messages: int = 0
    redirects: int = 0
    survivors: int = 0
    reverse_attempts: int = 0
    inserted: int = 0
    duplicate: int = 0
    replaced: int = 0
    rejected: int = 0


@dataclass
class BuildState:
    """Per-vertex double-buffered pools plus replayable RNG bookkeeping.

    Row v of the read/write arrays is vertex v's pool buffer; valid slots
    carry id != TOMBSTONE.  Between rounds every write buffer is empty and
    every read buffer holds at most R packed, duplicate-free entries.
    """

    data: np.ndarray
    params: BuildParams
    read_ids: np.ndarray
    read_dists: np.ndarray
    read_count: np.ndarray
    write_ids: np.ndarray
    write_dists: np.ndarray
    write_count: np.ndarray
    round_index: int = 0
    pair_order: str = "disordered"
    totals: RoundStats = field(default_factory=lambda: RoundStats(kind="total"))
    # scratch message buffers, one slice of width R per source vertex
    _msg_tgt: np.ndarray | None = None
    _msg_id: np.ndarray | None = None
    _msg_dist: np.ndarray | None = None
    _msg_cnt: np.ndarray | None = None

    @property
    def num_vertices(self) -> int:
        return self.read_ids.shape[0]

    @property
    def capacity(self) -> int:
        return self.read_ids.shape[1]

    def pool(self, v: int) -> DoubleBufferPool:
        return DoubleBufferPool(
            owner=v,
            read_ids=self.read_ids[v],
            read_dists=self.read_dists[v],
            write_ids=self.write_ids[v],
            write_dists=self.write_dists[v],
            write_count=int(self.write_count[v]),
        )

    def _scratch(self):
        if self._msg_tgt is None:
            size = self.num_vertices * self.capacity
            self._msg_tgt = np.empty(size, dtype=np.int32)
            self._msg_id = np.empty(size, dtype=np.int32)
            self._msg_dist = np.empty(size, dtype=np.float32)
            self._msg_cnt = np.zeros(self.num_vertices, dtype=np.int32)
        return self._msg_tgt, self._msg_id, self._msg_dist, self._msg_cnt

    def clear_and_swap(self) -> None:
        self.read_ids.fill(TOMBSTONE)
        self.read_dists.fill(np.inf)
        self.read_count.fill(0)
        self.read_ids, self.write_ids = self.write_ids, self.read_ids
        self.read_dists, self.write_dists = self.write_dists, self.read_dists
        self.read_count, self.write_count = self.write_count, self.read_count


class _WorkerThreads:
    """Pin numba's thread count to params.workers for the kernel calls."""

    def __init__(self, workers: int):
        self.workers = workers
        self._prev = None

    def __enter__(self):
        if _backend.active_backend() != "numba":
            return self
        import numba

        limit = numba.config.NUMBA_NUM_THREADS
        want = min(self.workers, limit)
        if self.workers > limit:
            warnings.warn(
                f"workers={self.workers} exceeds the {limit} threads numba "
                f"was launched with; using {limit}"
            )
        self._prev = numba.get_num_threads()
        numba.set_num_threads(want)
        return self

    def __exit__(self, *exc):
        if self._prev is not None:
            import numba

            numba.set_num_threads(self._prev)


def effective_params(params: BuildParams, n: int) -> BuildParams:
    """Clamp S and R for degenerate small datasets (with a warning)."""
    if n >= 2 and (params.S > n - 1 or params.R > n - 1):
        r = min(params.R, n - 1)
        s = min(params.S, r)
        warnings.warn(
            f"dataset has only {n} points; clamping S={params.S}->{s}, R={params.R}->{r}"
        )
        params = replace(params, S=s, R=r)
    return params


def init_neighbors(
    dataset: Dataset, params: BuildParams, pair_order: PairOrder = "disordered"
) -> BuildState:
    """Fill every read buffer with S distinct random neighbors != owner."""
    dataset.validate()
    n = dataset.num_points
    validate_params(params, n)
    if params.S > n - 1:
        raise ParamError("S <= N-1")
    if pair_order not in _ORDER_CODES:
        raise ParamError(f"pair_order must be one of {sorted(_ORDER_CODES)}")
    k = _backend.get_kernels()
    cap = params.R
    seed = np.uint64(params.seed & MASK64)
    ids = np.full((n, params.S), -1, dtype=np.int32)
    fail = np.zeros(1, dtype=np.int64)
    with _WorkerThreads(params.workers):
        k.sample_initial(n, params.S, seed, ids, fail)
        if fail[0]:  # pragma: no cover
            raise RuntimeError("initial neighbor sampling did not converge")
        dists = np.empty((n, params.S), dtype=np.float32)
        k.init_dists(dataset.data, ids, dists)
    read_ids = np.full((n, cap), TOMBSTONE, dtype=np.int32)
    read_dists = np.full((n, cap), np.inf, dtype=np.float32)
    read_ids[:, : params.S] = ids
    read_dists[:, : params.S] = dists
    return BuildState(
        data=dataset.data,
        params=params,
        read_ids=read_ids,
        read_dists=read_dists,
        read_count=np.full(n, params.S, dtype=np.int32),
        write_ids=np.full((n, cap), TOMBSTONE, dtype=np.int32),
        write_dists=np.full((n, cap), np.inf, dtype=np.float32),
        write_count=np.zeros(n, dtype=np.int32),
        pair_order=pair_order,
    )


def _apply(state: BuildState, flat_id, flat_dist, flat_tgt, stats: RoundStats) -> None:
    k = _backend.get_kernels()
    order, starts = k.group_by_target(flat_tgt, state.num_vertices)
    ins, dup, rep, rej = k.apply_grouped_messages(
        state.write_ids, state.write_dists, state.write_count, flat_id, flat_dist, order, starts
    )
    stats.inserted += int(ins)
    stats.duplicate += int(dup)
    stats.replaced += int(rep)
    stats.rejected += int(rej)


def _accumulate(totals: RoundStats, stats: RoundStats) -> None:
    totals.messages += stats.messages
    totals.redirects += stats.redirects
    totals.survivors += stats.survivors
    totals.reverse_attempts += stats.reverse_attempts
    totals.inserted += stats.inserted
    totals.duplicate += stats.duplicate
    totals.replaced += stats.replaced
    totals.rejected += stats.rejected


def update_round(state: BuildState) -> RoundStats:
    """Run one pair-propagation round (phases 1-3 of the module docstring)."""
    k = _backend.get_kernels()
    stats = RoundStats(kind="update")
    mt, mi, md, mc = state._scratch()
    seed = np.uint64(state.params.seed & MASK64)
    stream = np.uint64(STREAM_ROUND_BASE + state.round_index)
    with _WorkerThreads(state.params.workers):
        k.gen_update_messages(
            state.data,
            state.read_ids,
            state.read_dists,
            state.read_count,
            seed,
            stream,
            _ORDER_CODES[state.pair_order],
            mt,
            mi,
            md,
            mc,
        )
        flat_tgt, flat_id, flat_dist, src = k.build_flat(mt, mi, md, mc, state.capacity)
        stats.messages = int(flat_tgt.size)
        stats.redirects = int(np.count_nonzero(flat_tgt != src))
        stats.survivors = stats.messages - stats.redirects
        _apply(state, flat_id, flat_dist, flat_tgt, stats)
    state.clear_and_swap()
    state.round_index += 1
    _accumulate(state.totals, stats)
    return stats


def reverse_edge_sampling(state: BuildState) -> RoundStats:
    """Queue reverse edges for each vertex's closest ceil(rho*k) neighbors,
    apply them, then re-merge every vertex's own entries; clear and swap."""
    k = _backend.get_kernels()
    stats = RoundStats(kind="reverse")
    mt, mi, md, mc = state._scratch()
    with _WorkerThreads(state.params.workers):
        k.gen_reverse_messages(
            state.read_ids, state.read_dists, state.read_count, state.params.rho, mt, mi, md, mc
        )
        flat_tgt, flat_id, flat_dist, _ = k.build_flat(mt, mi, md, mc, state.capacity)
        stats.reverse_attempts = int(flat_tgt.size)
        stats.messages = int(flat_tgt.size)
        _apply(state, flat_id, flat_dist, flat_tgt, stats)
        # barrier between the reverse inserts and the self merges
        k.gen_merge_messages(
            state.read_ids, state.read_dists, state.read_count, mt, mi, md, mc
        )
        flat_tgt, flat_id, flat_dist, _ = k.build_flat(mt, mi, md, mc, state.capacity)
        stats.messages += int(flat_tgt.size)
        stats.survivors = int(flat_tgt.size)
        _apply(state, flat_id, flat_dist, flat_tgt, stats)
    state.clear_and_swap()
    _accumulate(state.totals, stats)
    return stats


def finalize_graph(state: BuildState) -> Graph:
    """Emit each read buffer's valid entries, ascending by (dist, id)."""
    n, cap = state.num_vertices, state.capacity
    counts = state.read_count.astype(np.int64)
    dd = np.where(
        np.arange(cap)[None, :] < counts[:, None], state.read_dists, np.float32(np.inf)
    )
    rows = np.repeat(np.arange(n, dtype=np.int64), cap)
    order = np.lexsort((state.read_ids.ravel(), dd.ravel(), rows)).reshape(n, cap)
    sorted_ids = state.read_ids.ravel()[order.ravel()].reshape(n, cap)
    mask = np.arange(cap)[None, :] < counts[:, None]
    offsets = np.zeros(n + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(counts)
    graph = Graph(
        num_vertices=n,
        offsets=offsets,
        neighbor_ids=sorted_ids[mask].astype(np.int32),
        max_degree_bound=cap,
    )
    graph.validate(cap)
    return graph


def build(
    dataset: Dataset,
    params: BuildParams,
    pair_order: PairOrder = "disordered",
    report_stats: list | None = None,
) -> Graph:
    """Full build: init, T1 x T2 pair rounds with reverse-edge sampling
    between outer iterations, then graph emission.

    ``pair_order='ascending'`` is a debug mode that replaces the random
    pair order with ascending-by-distance, for studying the synchronized
    convergence trap.  ``report_stats``, when given, collects per-round
    RoundStats.
    """
    params = effective_params(params, dataset.num_points)
    state = init_neighbors(dataset, params, pair_order)
    for t1 in range(1, params.T1 + 1):
        for _ in range(params.T2):
            stats = update_round(state)
            if report_stats is not None:
                report_stats.append(stats)
        if t1 != params.T1:
            stats = reverse_edge_sampling(state)
            if report_stats is not None:
                report_stats.append(stats)
    return finalize_graph(state)


def validate_state(state: BuildState, tol: float = 1e-4) -> None:
    """Round-boundary pool invariants; raises AssertionError on violation.

    Checks capacity, packing, duplicate freedom, absence of self-loops,
    and stored-distance honesty against a float64 recomputation.
    """
    n, cap = state.num_vertices, state.capacity
    counts = state.read_count
    assert counts.min() >= 0 and counts.max() <= cap, "read count out of range"
    assert np.all(state.write_count == 0), "write buffers not empty at boundary"
    assert np.all(state.write_ids == TOMBSTONE), "write buffer has stale entries"
    col = np.arange(cap)[None, :]
    valid = col < counts[:, None]
    ids = state.read_ids
    assert np.all(ids[valid] >= 0), "tombstone inside the packed prefix"
    assert np.all(ids[~valid] == TOMBSTONE), "valid id beyond the packed prefix"
    owners = np.broadcast_to(np.arange(n, dtype=np.int32)[:, None], (n, cap))
    assert not np.any(ids[valid] == owners[valid]), "self-loop in a pool"
    sids = np.sort(np.where(valid, ids, np.int32(2**31 - 1)), axis=1)
    dup = (sids[:, 1:] == sids[:, :-1]) & (sids[:, 1:] != 2**31 - 1)
    assert not np.any(dup), "duplicate id within one pool"
    if np.any(valid):
        rows = np.repeat(np.arange(n), counts)
        flat_ids = ids[valid]
        diff = state.data[rows].astype(np.float64) - state.data[flat_ids].astype(np.float64)
        true_sq = (diff * diff).sum(axis=1)
        stored = state.read_dists[valid].astype(np.float64)
        err = np.abs(stored - true_sq) / np.maximum(true_sq, 1e-30)
        exact_zero = (true_sq == 0) & (stored == 0)
        assert np.all(exact_zero | (err <= tol)), "stored distance drifted from truth"


def main_warmup() -> None:
    """Compile the active backend's kernels ahead of any timed section."""
    _backend.get_kernels().warmup()


if __name__ == "__main__":  # pragma: no cover
    main_warmup()
    print("kernels ready", file=sys.stderr)
