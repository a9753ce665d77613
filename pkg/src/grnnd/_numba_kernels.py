"""numba nopython kernels (default backend).

Layout shared with the numpy fallback: per-vertex message slices of width
R, packed pool rows, counter-based RNG.  The RNG arithmetic here must stay
bit-identical to :mod:`grnnd.rng`; tests compare the two.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .rng import ATTEMPT_STRIDE, STREAM_INIT

TOMB = np.int32(-1)

ORDER_DISORDERED = 0
ORDER_ASCENDING = 1

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


@njit(inline="always", cache=True)
def _mix64(x):
    x = x + _GOLD
    x = (x ^ (x >> _S30)) * _M1
    x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


@njit(inline="always", cache=True)
def _hash4(seed, stream, v, i):
    h = _mix64(seed)
    h = _mix64(h ^ stream)
    h = _mix64(h ^ v)
    return _mix64(h ^ i)


@njit(cache=True)
def hash4_u64(seed, stream, v, i):
    """Exposed for RNG equivalence tests."""
    return _hash4(np.uint64(seed), np.uint64(stream), np.uint64(v), np.uint64(i))


@njit(inline="always", cache=True)
def _sqdist(a, b):
    s = np.float32(0.0)
    for d in range(a.shape[0]):
        diff = a[d] - b[d]
        s += diff * diff
    return s


@njit(cache=True)
def sqdist(a, b):
    return _sqdist(a, b)


@njit(inline="always", cache=True)
def _fill_perm(perm, k, seed, stream, v, read_ids, read_dists, order_code):
    # disordered: hash-driven Fisher-Yates; ascending: sort by (dist, id)
    for i in range(k):
        perm[i] = i
    if order_code == ORDER_DISORDERED:
        for i in range(k - 1, 0, -1):
            j = np.int64(_hash4(seed, stream, np.uint64(v), np.uint64(i)) % np.uint64(i + 1))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp
    else:
        for i in range(1, k):
            p = perm[i]
            dp = read_dists[p]
            ip = read_ids[p]
            j = i - 1
            while j >= 0 and (
                read_dists[perm[j]] > dp
                or (read_dists[perm[j]] == dp and read_ids[perm[j]] > ip)
            ):
                perm[j + 1] = perm[j]
                j -= 1
            perm[j + 1] = p
    return perm


@njit(parallel=True, cache=True)
def sample_initial(n, count, seed, out, fail_flag):
    limit = min(64 * n + 64, ATTEMPT_STRIDE)
    seed_u = np.uint64(seed)
    stream_u = np.uint64(STREAM_INIT)
    for v in prange(n):
        for s in range(count):
            placed = False
            for a in range(limit):
                idx = np.uint64(s * ATTEMPT_STRIDE + a)
                c = np.int64(_hash4(seed_u, stream_u, np.uint64(v), idx) % np.uint64(n))
                if c == v:
                    continue
                dup = False
                for t in range(s):
                    if out[v, t] == c:
                        dup = True
                        break
                if dup:
                    continue
                out[v, s] = np.int32(c)
                placed = True
                break
            if not placed:  # pragma: no cover - probability ~ exp(-64)
                fail_flag[0] = 1


@njit(parallel=True, cache=True)
def init_dists(data, ids, out):
    for v in prange(ids.shape[0]):
        for s in range(ids.shape[1]):
            out[v, s] = _sqdist(data[v], data[ids[v, s]])


@njit(parallel=True, cache=True)
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
    """Pair phase of one refinement round.

    For every vertex, visit all pool pairs in the per-vertex order, apply
    the redirect rule (pair distance strictly below the larger of the two
    stored distances sends the farther member toward the closer one), mark
    redirected slots TOMBSTONE in place, then queue every survivor for the
    owner's own write buffer.  Each source entry yields exactly one
    message, so slice width R always suffices.
    """
    n, cap = read_ids.shape
    seed_u = np.uint64(seed)
    stream_u = np.uint64(stream)
    for v in prange(n):
        k = read_count[v]
        base = v * cap
        c = 0
        if k > 0:
            perm = np.empty(k, dtype=np.int32)
            _fill_perm(perm, k, seed_u, stream_u, v, read_ids[v], read_dists[v], order_code)
            for x in range(k - 1):
                sa = perm[x]
                ida = read_ids[v, sa]
                if ida == TOMB:
                    continue
                dva = read_dists[v, sa]
                for y in range(x + 1, k):
                    sb = perm[y]
                    idb = read_ids[v, sb]
                    if idb == TOMB:
                        continue
                    dvb = read_dists[v, sb]
                    dij = _sqdist(data[ida], data[idb])
                    hi = dva if dva >= dvb else dvb
                    if dij < hi:
                        if dvb >= dva:  # tie keeps the pair's first member
                            msg_tgt[base + c] = ida
                            msg_id[base + c] = idb
                            msg_dist[base + c] = dij
                            read_ids[v, sb] = TOMB
                            c += 1
                        else:
                            msg_tgt[base + c] = idb
                            msg_id[base + c] = ida
                            msg_dist[base + c] = dij
                            read_ids[v, sa] = TOMB
                            c += 1
                            break  # pair anchor is gone
            for s in range(k):
                if read_ids[v, s] != TOMB:
                    msg_tgt[base + c] = v
                    msg_id[base + c] = read_ids[v, s]
                    msg_dist[base + c] = read_dists[v, s]
                    c += 1
        msg_cnt[v] = c


@njit(parallel=True, cache=True)
def gen_reverse_messages(
    read_ids, read_dists, read_count, rho, msg_tgt, msg_id, msg_dist, msg_cnt
):
    """Queue reverse edges for the ceil(rho*k) closest neighbors per vertex."""
    n, cap = read_ids.shape
    for v in prange(n):
        k = read_count[v]
        base = v * cap
        if k == 0:
            msg_cnt[v] = 0
            continue
        f = rho * k
        m = np.int64(f)
        if f - m > 1e-9:
            m += 1
        if m > k:
            m = k
        order = np.empty(k, dtype=np.int32)
        for i in range(k):
            order[i] = i
        for i in range(1, k):  # insertion sort by (dist, id)
            p = order[i]
            dp = read_dists[v, p]
            ip = read_ids[v, p]
            j = i - 1
            while j >= 0 and (
                read_dists[v, order[j]] > dp
                or (read_dists[v, order[j]] == dp and read_ids[v, order[j]] > ip)
            ):
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = p
        for i in range(m):
            slot = order[i]
            msg_tgt[base + i] = read_ids[v, slot]
            msg_id[base + i] = v
            msg_dist[base + i] = read_dists[v, slot]
        msg_cnt[v] = m


@njit(parallel=True, cache=True)
def gen_merge_messages(read_ids, read_dists, read_count, msg_tgt, msg_id, msg_dist, msg_cnt):
    """Queue every read entry for its owner's write buffer (slot order)."""
    n, cap = read_ids.shape
    for v in prange(n):
        k = read_count[v]
        base = v * cap
        c = 0
        for s in range(k):
            if read_ids[v, s] != TOMB:
                msg_tgt[base + c] = v
                msg_id[base + c] = read_ids[v, s]
                msg_dist[base + c] = read_dists[v, s]
                c += 1
        msg_cnt[v] = c


@njit(parallel=True, cache=True)
def _compact(msg_tgt, msg_id, msg_dist, msg_cnt, cap, offs, flat_tgt, flat_id, flat_dist, flat_src):
    for v in prange(msg_cnt.shape[0]):
        o = offs[v]
        base = v * cap
        for i in range(msg_cnt[v]):
            flat_tgt[o + i] = msg_tgt[base + i]
            flat_id[o + i] = msg_id[base + i]
            flat_dist[o + i] = msg_dist[base + i]
            flat_src[o + i] = v


def build_flat(msg_tgt, msg_id, msg_dist, msg_cnt, cap):
    """Pack per-vertex message slices into flat arrays, vertex-major."""
    n = msg_cnt.shape[0]
    offs = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(msg_cnt, out=offs[1:])
    total = int(offs[-1])
    flat_tgt = np.empty(total, dtype=np.int32)
    flat_id = np.empty(total, dtype=np.int32)
    flat_dist = np.empty(total, dtype=np.float32)
    flat_src = np.empty(total, dtype=np.int32)
    _compact(msg_tgt, msg_id, msg_dist, msg_cnt, cap, offs, flat_tgt, flat_id, flat_dist, flat_src)
    return flat_tgt, flat_id, flat_dist, flat_src


@njit(cache=True)
def _counting_group(flat_tgt, order, starts, cursor):
    m = flat_tgt.shape[0]
    for i in range(m):
        starts[flat_tgt[i] + 1] += 1
    for t in range(starts.shape[0] - 1):
        starts[t + 1] += starts[t]
    for t in range(cursor.shape[0]):
        cursor[t] = starts[t]
    for i in range(m):
        t = flat_tgt[i]
        order[cursor[t]] = i
        cursor[t] += 1


def group_by_target(flat_tgt, n):
    """Stable O(M) counting sort of message indices by target pool."""
    order = np.empty(flat_tgt.shape[0], dtype=np.int64)
    starts = np.zeros(n + 1, dtype=np.int64)
    cursor = np.empty(n, dtype=np.int64)
    _counting_group(flat_tgt, order, starts, cursor)
    return order, starts


@njit(parallel=True, cache=True)
def apply_grouped_messages(
    write_ids, write_dists, write_count, flat_id, flat_dist, grp_order, grp_start
):
    """Insert messages, grouped by target pool, one thread per pool.

    Per message: skip if the id is already present; claim the next free
    slot if any; otherwise replace the farthest entry (ties resolve to the
    lowest slot) when strictly closer, else reject.  Returns counts of
    (inserted, duplicate, replaced, rejected).
    """
    n, cap = write_ids.shape
    ins = np.int64(0)
    dup = np.int64(0)
    rep = np.int64(0)
    rej = np.int64(0)
    for t in prange(n):
        for ii in range(grp_start[t], grp_start[t + 1]):
            m = grp_order[ii]
            cid = flat_id[m]
            cd = flat_dist[m]
            cnt = write_count[t]
            found = False
            for s in range(cnt):
                if write_ids[t, s] == cid:
                    found = True
                    break
            if found:
                dup += 1
                continue
            if cnt < cap:
                write_ids[t, cnt] = cid
                write_dists[t, cnt] = cd
                write_count[t] = cnt + 1
                ins += 1
                continue
            mx = np.float32(-1.0)
            mi = -1
            for s in range(cap):
                if write_dists[t, s] > mx:
                    mx = write_dists[t, s]
                    mi = s
            if cd < mx:
                write_ids[t, mi] = cid
                write_dists[t, mi] = cd
                rep += 1
            else:
                rej += 1
    return ins, dup, rep, rej


@njit(cache=True)
def refine_accept_loop(data, ids, dists, acc_ids, acc_dists, red_tgt, red_id, red_dist):
    """Sequential accept loop: keep a candidate unless some already-kept
    neighbor sits at or within its own distance to the owner; redirected
    candidates go to the first such neighbor.  Inputs must be sorted
    ascending by (dist, id) and duplicate-free."""
    k = ids.shape[0]
    na = 0
    nr = 0
    for i in range(k):
        cand = ids[i]
        dvn = dists[i]
        valid = True
        for j in range(na):
            kept = acc_ids[j]
            dnn = _sqdist(data[cand], data[kept])
            if dnn <= dvn:
                red_tgt[nr] = kept
                red_id[nr] = cand
                red_dist[nr] = dnn
                nr += 1
                valid = False
                break
        if valid:
            acc_ids[na] = cand
            acc_dists[na] = dvn
            na += 1
    return na, nr


@njit(parallel=True, cache=True)
def brute_force(data, queries, k, out_ids):
    n = data.shape[0]
    for qi in prange(queries.shape[0]):
        q = queries[qi]
        bd = np.empty(k, dtype=np.float32)
        bi = np.empty(k, dtype=np.int32)
        size = 0
        for p in range(n):
            d = _sqdist(q, data[p])
            if size == k:
                if d > bd[k - 1] or (d == bd[k - 1] and p > bi[k - 1]):
                    continue
            pos = size
            for i in range(size):
                if bd[i] > d or (bd[i] == d and bi[i] > p):
                    pos = i
                    break
            if pos >= k:
                continue
            top = size if size < k else k - 1
            for i in range(top, pos, -1):
                bd[i] = bd[i - 1]
                bi[i] = bi[i - 1]
            bd[pos] = d
            bi[pos] = np.int32(p)
            if size < k:
                size += 1
        for i in range(k):
            out_ids[qi, i] = bi[i] if i < size else -1


@njit(cache=True)
def _greedy_single(offsets, nbrs, data, q, L, k, entry, visited, cids, cds, cexp, out_ids, out_d):
    size = 1
    cids[0] = entry
    cds[0] = _sqdist(q, data[entry])
    cexp[0] = False
    visited[entry] = 1
    while True:
        cur = -1
        for i in range(size):
            if not cexp[i]:
                cur = i
                break
        if cur == -1:
            break
        cexp[cur] = True
        node = cids[cur]
        for e in range(offsets[node], offsets[node + 1]):
            nb = nbrs[e]
            if visited[nb] == 1:
                continue
            visited[nb] = 1
            d = _sqdist(q, data[nb])
            if size == L:
                if d > cds[L - 1] or (d == cds[L - 1] and nb > cids[L - 1]):
                    continue
            pos = size
            for i in range(size):
                if cds[i] > d or (cds[i] == d and cids[i] > nb):
                    pos = i
                    break
            if pos >= L:
                continue
            top = size if size < L else L - 1
            for i in range(top, pos, -1):
                cids[i] = cids[i - 1]
                cds[i] = cds[i - 1]
                cexp[i] = cexp[i - 1]
            cids[pos] = nb
            cds[pos] = d
            cexp[pos] = False
            if size < L:
                size += 1
    cnt = k if size > k else size
    for i in range(cnt):
        out_ids[i] = cids[i]
        out_d[i] = cds[i]
    return cnt


def greedy_search_single(offsets, nbrs, data, q, L, k, entry):
    n = data.shape[0]
    visited = np.zeros(n, dtype=np.uint8)
    cids = np.empty(L, dtype=np.int32)
    cds = np.empty(L, dtype=np.float32)
    cexp = np.empty(L, dtype=np.bool_)
    out_ids = np.full(k, -1, dtype=np.int32)
    out_d = np.full(k, np.inf, dtype=np.float32)
    cnt = _greedy_single(
        offsets, nbrs, data, q, np.int64(L), np.int64(k), np.int64(entry), visited, cids, cds, cexp, out_ids, out_d
    )
    return out_ids[:cnt], out_d[:cnt]


@njit(parallel=True, cache=True)
def _greedy_batch(offsets, nbrs, data, queries, L, k, entries, out_ids, out_d, out_cnt):
    n = data.shape[0]
    for qi in prange(queries.shape[0]):
        visited = np.zeros(n, dtype=np.uint8)
        cids = np.empty(L, dtype=np.int32)
        cds = np.empty(L, dtype=np.float32)
        cexp = np.empty(L, dtype=np.bool_)
        out_cnt[qi] = _greedy_single(
            offsets,
            nbrs,
            data,
            queries[qi],
            L,
            k,
            entries[qi],
            visited,
            cids,
            cds,
            cexp,
            out_ids[qi],
            out_d[qi],
        )


def greedy_search_batch(offsets, nbrs, data, queries, L, k, entries):
    nq = queries.shape[0]
    out_ids = np.full((nq, k), -1, dtype=np.int32)
    out_d = np.full((nq, k), np.inf, dtype=np.float32)
    out_cnt = np.zeros(nq, dtype=np.int64)
    _greedy_batch(
        offsets, nbrs, data, queries, np.int64(L), np.int64(k), entries, out_ids, out_d, out_cnt
    )
    return out_ids, out_d, out_cnt


def warmup() -> None:
    """Compile every kernel on a toy instance (keeps timed runs honest)."""
    data = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], dtype=np.float32)
    n, cap = 4, 2
    ids = np.full((n, cap), -1, dtype=np.int32)
    flag = np.zeros(1, dtype=np.int64)
    sample_initial(n, 1, 1, ids, flag)
    dists = np.zeros((n, 1), dtype=np.float32)
    init_dists(data, ids[:, :1], dists)
    rid = np.full((n, cap), -1, dtype=np.int32)
    rid[:, 0] = ids[:, 0]
    rd = np.zeros((n, cap), dtype=np.float32)
    rd[:, 0] = dists[:, 0]
    rc = np.ones(n, dtype=np.int32)
    mt = np.full(n * cap, -1, dtype=np.int32)
    mi = np.full(n * cap, -1, dtype=np.int32)
    md = np.zeros(n * cap, dtype=np.float32)
    mc = np.zeros(n, dtype=np.int32)
    gen_update_messages(data, rid.copy(), rd, rc, 1, 1, ORDER_DISORDERED, mt, mi, md, mc)
    gen_reverse_messages(rid, rd, rc, 0.5, mt, mi, md, mc)
    gen_merge_messages(rid, rd, rc, mt, mi, md, mc)
    wid = np.full((n, cap), -1, dtype=np.int32)
    wd = np.zeros((n, cap), dtype=np.float32)
    wc = np.zeros(n, dtype=np.int32)
    ft, fi, fd, _ = build_flat(mt, mi, md, mc, cap)
    ft = np.abs(ft) % n
    order, starts = group_by_target(ft, n)
    apply_grouped_messages(wid, wd, wc, fi, fd, order, starts)
    out = np.zeros((1, 2), dtype=np.int32)
    brute_force(data, data[:1], 2, out)
    offsets = np.array([0, 1, 2, 3, 4], dtype=np.int64)
    nbrs = np.array([1, 0, 3, 2], dtype=np.int32)
    greedy_search_batch(offsets, nbrs, data, data[:1], 2, 1, np.zeros(1, dtype=np.int64))
    hash4_u64(1, 2, 3, 4)
    sqdist(data[0], data[1])
    acc_i = np.empty(2, dtype=np.int32)
    acc_d = np.empty(2, dtype=np.float32)
    refine_accept_loop(
        data,
        np.array([1, 2], dtype=np.int32),
        np.array([1.0, 1.0], dtype=np.float32),
        acc_i,
        acc_d,
        acc_i.copy(),
        acc_i.copy(),
        acc_d.copy(),
    )
