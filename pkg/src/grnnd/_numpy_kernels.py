"""Pure-numpy fallback kernels.

Same interface and same RNG as :mod:`grnnd._numba_kernels`.  The pair
phase is vectorized across vertices: all vertices process their p-th
candidate pair in lockstep, which reproduces the per-vertex sequential
semantics exactly (pair visit order and tombstone effects are per vertex).
Insert application stays a scalar loop; that cost is what the numba
backend removes, see benchmarks/compare_backends.py.
"""

from __future__ import annotations

import numpy as np

from .rng import (
    fisher_yates_perm_batch,
    hash4,
    sample_distinct_batch,
)

TOMB = np.int32(-1)

ORDER_DISORDERED = 0
ORDER_ASCENDING = 1


def hash4_u64(seed, stream, v, i):
    return hash4(seed, stream, v, i)


def sqdist(a, b):
    diff = a.astype(np.float32) - b.astype(np.float32)
    return np.float32((diff * diff).sum(dtype=np.float32))


def sample_initial(n, count, seed, out, fail_flag):
    out[:, :] = sample_distinct_batch(n, count, seed)


def init_dists(data, ids, out):
    diff = data[ids] - data[:, None, :]
    out[:, :] = (diff * diff).sum(axis=2, dtype=np.float32)


def _row_order_by_dist(read_ids, read_dists, counts, kmax):
    """Per-row slot order sorted by (dist, id); invalid slots sort last."""
    n = read_ids.shape[0]
    dd = np.where(
        np.arange(kmax)[None, :] < counts[:, None],
        read_dists[:, :kmax],
        np.float32(np.inf),
    )
    ii = read_ids[:, :kmax]
    rows = np.repeat(np.arange(n, dtype=np.int64), kmax)
    flat = np.lexsort((ii.ravel(), dd.ravel(), rows))
    return (flat.reshape(n, kmax) - np.arange(n, dtype=np.int64)[:, None] * kmax).astype(
        np.int32
    )


def gen_update_messages(
    data,
    read_ids,
    read_dists,
    read_count,
    seed,
    stream,
    order_code,
    msg_tgt,
    msg_id,
    msg_dist,
    msg_cnt,
):
    n, cap = read_ids.shape
    counts = read_count.astype(np.int64)
    kmax = int(counts.max()) if n else 0
    if kmax > 0:
        if order_code == ORDER_DISORDERED:
            perm = fisher_yates_perm_batch(counts, seed, stream, kmax)
        else:
            perm = _row_order_by_dist(read_ids, read_dists, counts, kmax)
    cur = np.zeros(n, dtype=np.int64)
    for x in range(kmax - 1):
        for y in range(x + 1, kmax):
            av = np.flatnonzero(counts > y)
            if av.size == 0:
                break
            sa = perm[av, x]
            sb = perm[av, y]
            ida = read_ids[av, sa]
            idb = read_ids[av, sb]
            live = (ida != TOMB) & (idb != TOMB)
            if not live.any():
                continue
            av, sa, sb = av[live], sa[live], sb[live]
            ida, idb = ida[live], idb[live]
            diff = data[ida] - data[idb]
            dij = (diff * diff).sum(axis=1, dtype=np.float32)
            dva = read_dists[av, sa]
            dvb = read_dists[av, sb]
            red = dij < np.maximum(dva, dvb)
            if not red.any():
                continue
            av, sa, sb = av[red], sa[red], sb[red]
            ida, idb, dij = ida[red], idb[red], dij[red]
            b_far = dvb[red] >= dva[red]  # tie keeps the pair's first member
            pos = av * cap + cur[av]
            msg_tgt[pos] = np.where(b_far, ida, idb)
            msg_id[pos] = np.where(b_far, idb, ida)
            msg_dist[pos] = dij
            cur[av] += 1
            read_ids[av, np.where(b_far, sb, sa)] = TOMB
    for s in range(kmax):
        av = np.flatnonzero(counts > s)
        ids = read_ids[av, s]
        live = ids != TOMB
        av = av[live]
        pos = av * cap + cur[av]
        msg_tgt[pos] = av
        msg_id[pos] = ids[live]
        msg_dist[pos] = read_dists[av, s]
        cur[av] += 1
    msg_cnt[:] = cur


def gen_reverse_messages(
    read_ids, read_dists, read_count, rho, msg_tgt, msg_id, msg_dist, msg_cnt
):
    n, cap = read_ids.shape
    counts = read_count.astype(np.int64)
    kmax = int(counts.max()) if n else 0
    f = rho * counts
    m = np.floor(f).astype(np.int64)
    m += (f - m) > 1e-9
    m = np.minimum(m, counts)
    if kmax > 0:
        order = _row_order_by_dist(read_ids, read_dists, counts, kmax)
    for i in range(int(m.max()) if n else 0):
        av = np.flatnonzero(m > i)
        slot = order[av, i]
        pos = av * cap + i
        msg_tgt[pos] = read_ids[av, slot]
        msg_id[pos] = av
        msg_dist[pos] = read_dists[av, slot]
    msg_cnt[:] = m


def gen_merge_messages(read_ids, read_dists, read_count, msg_tgt, msg_id, msg_dist, msg_cnt):
    n, cap = read_ids.shape
    counts = read_count.astype(np.int64)
    kmax = int(counts.max()) if n else 0
    cur = np.zeros(n, dtype=np.int64)
    for s in range(kmax):
        av = np.flatnonzero(counts > s)
        ids = read_ids[av, s]
        live = ids != TOMB
        av = av[live]
        pos = av * cap + cur[av]
        msg_tgt[pos] = av
        msg_id[pos] = ids[live]
        msg_dist[pos] = read_dists[av, s]
        cur[av] += 1
    msg_cnt[:] = cur


def build_flat(msg_tgt, msg_id, msg_dist, msg_cnt, cap):
    """Pack per-vertex message slices into flat arrays, vertex-major."""
    counts = msg_cnt.astype(np.int64)
    mask = np.arange(cap)[None, :] < counts[:, None]
    pos = np.flatnonzero(mask.ravel())
    return msg_tgt[pos], msg_id[pos], msg_dist[pos], (pos // cap).astype(np.int32)


def group_by_target(flat_tgt, n):
    """Stable grouping of message indices by target pool."""
    order = np.argsort(flat_tgt, kind="stable").astype(np.int64)
    starts = np.zeros(n + 1, dtype=np.int64)
    starts[1:] = np.cumsum(np.bincount(flat_tgt, minlength=n))
    return order, starts


def apply_grouped_messages(
    write_ids, write_dists, write_count, flat_id, flat_dist, grp_order, grp_start
):
    n, cap = write_ids.shape
    ins = dup = rep = rej = 0
    for t in range(n):
        lo, hi = grp_start[t], grp_start[t + 1]
        if lo == hi:
            continue
        wi = write_ids[t]
        wd = write_dists[t]
        cnt = int(write_count[t])
        for ii in range(lo, hi):
            m = grp_order[ii]
            cid = flat_id[m]
            cd = flat_dist[m]
            if cid in wi[:cnt]:
                dup += 1
                continue
            if cnt < cap:
                wi[cnt] = cid
                wd[cnt] = cd
                cnt += 1
                ins += 1
                continue
            mi = int(np.argmax(wd))  # argmax takes the lowest slot on ties
            if cd < wd[mi]:
                wi[mi] = cid
                wd[mi] = cd
                rep += 1
            else:
                rej += 1
        write_count[t] = cnt
    return ins, dup, rep, rej


def refine_accept_loop(data, ids, dists, acc_ids, acc_dists, red_tgt, red_id, red_dist):
    """Sequential accept loop; see the numba twin for the contract."""
    k = ids.shape[0]
    na = 0
    nr = 0
    for i in range(k):
        cand = int(ids[i])
        dvn = dists[i]
        if na:
            diff = data[acc_ids[:na]] - data[cand]
            dnn = (diff * diff).sum(axis=1, dtype=np.float32)
            hit = np.flatnonzero(dnn <= dvn)
            if hit.size:
                j = int(hit[0])
                red_tgt[nr] = acc_ids[j]
                red_id[nr] = cand
                red_dist[nr] = dnn[j]
                nr += 1
                continue
        acc_ids[na] = cand
        acc_dists[na] = dvn
        na += 1
    return na, nr


def brute_force(data, queries, k, out_ids):
    n = data.shape[0]
    for qi in range(queries.shape[0]):
        diff = data - queries[qi]
        d = (diff * diff).sum(axis=1, dtype=np.float32)
        order = np.lexsort((np.arange(n), d))[:k]
        out_ids[qi, : order.size] = order
        out_ids[qi, order.size :] = -1


def greedy_search_single(offsets, nbrs, data, q, L, k, entry):
    visited = np.zeros(data.shape[0], dtype=bool)
    cids = np.empty(L, dtype=np.int32)
    cds = np.empty(L, dtype=np.float32)
    cexp = np.zeros(L, dtype=bool)
    cids[0] = entry
    cds[0] = sqdist(data[entry], q)
    size = 1
    visited[entry] = True
    while True:
        unexp = np.flatnonzero(~cexp[:size])
        if unexp.size == 0:
            break
        cur = unexp[0]
        cexp[cur] = True
        node = cids[cur]
        sl = nbrs[offsets[node] : offsets[node + 1]]
        fresh = sl[~visited[sl]]
        if fresh.size == 0:
            continue
        visited[fresh] = True
        diff = data[fresh] - q
        dd = (diff * diff).sum(axis=1, dtype=np.float32)
        for j in range(fresh.size):
            nb = fresh[j]
            d = dd[j]
            if size == L and (d > cds[L - 1] or (d == cds[L - 1] and nb > cids[L - 1])):
                continue
            pos = int(np.searchsorted(cds[:size], d, side="left"))
            while pos < size and cds[pos] == d and cids[pos] < nb:
                pos += 1
            if pos >= L:
                continue
            top = size if size < L else L - 1
            cids[pos + 1 : top + 1] = cids[pos:top]
            cds[pos + 1 : top + 1] = cds[pos:top]
            cexp[pos + 1 : top + 1] = cexp[pos:top]
            cids[pos] = nb
            cds[pos] = d
            cexp[pos] = False
            if size < L:
                size += 1
    cnt = min(k, size)
    return cids[:cnt].copy(), cds[:cnt].copy()


def greedy_search_batch(offsets, nbrs, data, queries, L, k, entries):
    nq = queries.shape[0]
    out_ids = np.full((nq, k), -1, dtype=np.int32)
    out_d = np.full((nq, k), np.inf, dtype=np.float32)
    out_cnt = np.zeros(nq, dtype=np.int64)
    for qi in range(nq):
        ids, ds = greedy_search_single(offsets, nbrs, data, queries[qi], L, k, int(entries[qi]))
        out_ids[qi, : ids.size] = ids
        out_d[qi, : ds.size] = ds
        out_cnt[qi] = ids.size
    return out_ids, out_d, out_cnt


def warmup() -> None:
    """Nothing to compile; present for interface parity."""
