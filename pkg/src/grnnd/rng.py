"""Counter-based random streams.

Every random decision in the builders is a pure function of
``(seed, stream, vertex, index)`` so that runs are replayable and the
worker schedule can never perturb results.  The mixer is the splitmix64
finalizer.  Three implementations must stay bit-identical: the scalar
Python one here, the vectorized numpy one here, and the nopython copies
inside the numba kernels (tests enforce the equivalence).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# stream ids; rounds use STREAM_ROUND_BASE + global round index
STREAM_INIT = 0
STREAM_ROUND_BASE = 1

# init sampling: attempt ``a`` for slot ``s`` uses index s*ATTEMPT_STRIDE + a
ATTEMPT_STRIDE = 1 << 22


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer (scalar)."""
    x = int(x) & MASK64
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def hash4(seed: int, stream: int, v: int, i: int) -> int:
    """Mix four 64-bit inputs into one uniform 64-bit output (scalar)."""
    h = mix64(seed)
    h = mix64(h ^ (int(stream) & MASK64))
    h = mix64(h ^ (int(v) & MASK64))
    h = mix64(h ^ (int(i) & MASK64))
    return h


def mix64_vec(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise on a uint64 array."""
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def hash4_vec(seed: int, stream: int, v: np.ndarray, i) -> np.ndarray:
    """Vectorized hash4 over an array of vertex ids (index may be scalar)."""
    h = np.full(v.shape, mix64(seed), dtype=np.uint64)
    h = mix64_vec(h ^ np.uint64(int(stream) & MASK64))
    h = mix64_vec(h ^ v.astype(np.uint64))
    h = mix64_vec(h ^ (np.asarray(i, dtype=np.uint64)))
    return h


def fisher_yates_perm(k: int, seed: int, stream: int, v: int) -> np.ndarray:
    """Random permutation of range(k) driven by the (seed, stream, v) hash.

    Swap position i draws its partner from hash index i, so the schedule
    is position-addressed rather than sequential and vectorizes across
    vertices without bookkeeping.
    """
    perm = np.arange(k, dtype=np.int32)
    for i in range(k - 1, 0, -1):
        j = hash4(seed, stream, v, i) % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def fisher_yates_perm_batch(
    counts: np.ndarray, seed: int, stream: int, kmax: int
) -> np.ndarray:
    """Per-row permutations for all vertices at once.

    Row v holds a permutation of range(counts[v]) in its first counts[v]
    slots; the rest is -1.  Bit-identical to calling
    :func:`fisher_yates_perm` per row.
    """
    n = counts.shape[0]
    perm = np.full((n, kmax), -1, dtype=np.int32)
    col = np.arange(kmax, dtype=np.int32)
    mask = col[None, :] < counts[:, None]
    perm[mask] = np.broadcast_to(col, (n, kmax))[mask]
    vids = np.arange(n, dtype=np.uint64)
    for i in range(kmax - 1, 0, -1):
        active = counts > i
        if not np.any(active):
            continue
        av = np.flatnonzero(active)
        j = (hash4_vec(seed, stream, vids[av], i) % np.uint64(i + 1)).astype(np.int64)
        pi = perm[av, i]
        perm[av, i] = perm[av, j]
        perm[av, j] = pi
    return perm


def sample_distinct(n: int, count: int, seed: int, v: int) -> np.ndarray:
    """``count`` distinct ids from 0..n-1, none equal to ``v`` (scalar)."""
    if count > n - 1:
        raise ValueError("cannot sample more than n-1 distinct neighbors")
    out = np.empty(count, dtype=np.int32)
    limit = min(64 * n + 64, ATTEMPT_STRIDE)
    for s in range(count):
        placed = False
        for a in range(limit):
            c = hash4(seed, STREAM_INIT, v, s * ATTEMPT_STRIDE + a) % n
            if c == v:
                continue
            if c in out[:s]:
                continue
            out[s] = c
            placed = True
            break
        if not placed:  # pragma: no cover - probability ~ exp(-64)
            raise RuntimeError("initial neighbor sampling did not converge")
    return out


def sample_distinct_batch(n: int, count: int, seed: int) -> np.ndarray:
    """All vertices' initial neighbor ids at once; matches sample_distinct."""
    if count > n - 1:
        raise ValueError("cannot sample more than n-1 distinct neighbors")
    out = np.full((n, count), -1, dtype=np.int32)
    limit = min(64 * n + 64, ATTEMPT_STRIDE)
    for s in range(count):
        pending = np.arange(n, dtype=np.int64)
        a = 0
        while pending.size:
            if a >= limit:  # pragma: no cover
                raise RuntimeError("initial neighbor sampling did not converge")
            c = (
                hash4_vec(seed, STREAM_INIT, pending.astype(np.uint64), s * ATTEMPT_STRIDE + a)
                % np.uint64(n)
            ).astype(np.int64)
            ok = c != pending
            for t in range(s):
                ok &= c != out[pending, t]
            hit = pending[ok]
            out[hit, s] = c[ok]
            pending = pending[~ok]
            a += 1
    return out.astype(np.int32)
