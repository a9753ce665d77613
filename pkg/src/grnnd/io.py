"""Corpus ingestion, synthetic data, and graph persistence.

fvecs/ivecs: repeated records of [dim: little-endian int32][dim payload
elements], float32 or int32 payloads.  All records must share one dim;
dim <= 0, truncated records, trailing bytes, and non-finite floats are
rejected with FormatError.

Graph files: 20-byte header (magic "GRND", version u32, num_vertices u64,
R u32, all little-endian), then N+1 offsets as u64, then neighbor ids as
u32.  Ids only; distances are derivable from the vectors.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Dataset, Graph
from .errors import FormatError, ParamError

GRAPH_MAGIC = b"GRND"
GRAPH_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


def _read_records(raw: bytes, what: str) -> tuple[int, np.ndarray]:
    """Parse the shared fvecs/ivecs layout into (dim, int32 record matrix)."""
    if len(raw) == 0:
        return 0, np.zeros((0, 0), dtype=np.int32)
    if len(raw) < 4:
        raise FormatError(f"{what}: truncated dim field")
    dim = int(np.frombuffer(raw, dtype="<i4", count=1)[0])
    if dim <= 0:
        raise FormatError(f"{what}: non-positive dim {dim}")
    rec = 4 * (dim + 1)
    if len(raw) % rec != 0:
        raise FormatError(f"{what}: truncated record or trailing bytes")
    mat = np.frombuffer(raw, dtype="<i4").reshape(-1, dim + 1)
    if not np.all(mat[:, 0] == dim):
        raise FormatError(f"{what}: inconsistent dim across records")
    return dim, mat


def read_fvecs(path) -> Dataset:
    """Load an fvecs file; empty files yield an empty (rejected-later) Dataset."""
    raw = Path(path).read_bytes()
    dim, mat = _read_records(raw, f"fvecs {path}")
    if dim == 0:
        return Dataset(np.zeros((0, 0), dtype=np.float32))
    vecs = mat[:, 1:].view("<f4")
    if not np.all(np.isfinite(vecs)):
        raise FormatError(f"fvecs {path}: non-finite value")
    return Dataset(vecs.astype(np.float32))


def write_fvecs(dataset: Dataset | np.ndarray, path) -> None:
    data = dataset.data if isinstance(dataset, Dataset) else np.asarray(dataset, np.float32)
    n, dim = data.shape
    out = np.empty((n, dim + 1), dtype="<i4")
    out[:, 0] = dim
    out[:, 1:] = np.ascontiguousarray(data, dtype="<f4").view("<i4")
    Path(path).write_bytes(out.tobytes())


def read_ivecs(path) -> np.ndarray:
    """Load an ivecs file as an (N, dim) int32 matrix (e.g. ground truth)."""
    raw = Path(path).read_bytes()
    dim, mat = _read_records(raw, f"ivecs {path}")
    if dim == 0:
        return np.zeros((0, 0), dtype=np.int32)
    return mat[:, 1:].astype(np.int32)


def write_ivecs(ids: np.ndarray, path) -> None:
    ids = np.asarray(ids, dtype=np.int32)
    n, dim = ids.shape
    out = np.empty((n, dim + 1), dtype="<i4")
    out[:, 0] = dim
    out[:, 1:] = ids
    Path(path).write_bytes(out.tobytes())


def write_graph(graph: Graph, path) -> None:
    """Persist a graph; the CSR invariants are validated first."""
    graph.validate()
    r = graph.max_degree_bound or (int(graph.degrees.max()) if graph.num_vertices else 0)
    parts = [
        _HEADER.pack(GRAPH_MAGIC, GRAPH_VERSION, graph.num_vertices, r),
        graph.offsets.astype("<u8").tobytes(),
        graph.neighbor_ids.astype("<u4").tobytes(),
    ]
    Path(path).write_bytes(b"".join(parts))


def read_graph(path) -> Graph:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"graph {path}: truncated header")
    magic, version, n, r = _HEADER.unpack_from(raw)
    if magic != GRAPH_MAGIC:
        raise FormatError(f"graph {path}: bad magic {magic!r}")
    if version != GRAPH_VERSION:
        raise FormatError(f"graph {path}: unsupported version {version}")
    off_end = _HEADER.size + 8 * (n + 1)
    if len(raw) < off_end:
        raise FormatError(f"graph {path}: truncated offsets")
    offsets = np.frombuffer(raw, dtype="<u8", count=n + 1, offset=_HEADER.size)
    if offsets[0] != 0 or np.any(np.diff(offsets.astype(np.int64)) < 0):
        raise FormatError(f"graph {path}: offsets not monotone from 0")
    m = int(offsets[-1])
    if len(raw) != off_end + 4 * m:
        raise FormatError(f"graph {path}: payload size mismatch or trailing bytes")
    ids = np.frombuffer(raw, dtype="<u4", count=m, offset=off_end)
    if m and ids.max() >= n:
        raise FormatError(f"graph {path}: neighbor id out of range")
    graph = Graph(
        num_vertices=int(n),
        offsets=offsets.astype(np.int64),
        neighbor_ids=ids.astype(np.int32),
        max_degree_bound=int(r),
    )
    try:
        graph.validate(int(r) if r else None)
    except ParamError as e:
        raise FormatError(f"graph {path}: {e}") from e
    return graph


def generate(
    n: int, dim: int, distribution: str = "uniform", seed: int = 0, clusters: int = 5
) -> Dataset:
    """Deterministic synthetic corpus: uniform, gaussian, or clustered.

    Clustered mode draws ``clusters`` gaussian centers (spread 10x the
    within-cluster spread) and scatters points around them.
    """
    if n < 2:
        raise ParamError(f"need n >= 2 points, got {n}")
    if dim < 1:
        raise ParamError("dim >= 1")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        data = rng.random((n, dim), dtype=np.float32)
    elif distribution == "gaussian":
        data = rng.standard_normal((n, dim), dtype=np.float32)
    elif distribution == "clustered":
        if clusters < 1:
            raise ParamError("clusters >= 1")
        centers = 10.0 * rng.standard_normal((clusters, dim))
        assignment = rng.integers(0, clusters, size=n)
        data = (centers[assignment] + rng.standard_normal((n, dim))).astype(np.float32)
    else:
        raise ParamError(f"unknown distribution {distribution!r}")
    return Dataset(data)
