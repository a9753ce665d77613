"""Core domain types: dataset, neighbor pools, graph, build parameters.

Distances stored in pools and candidate lists are SQUARED Euclidean
distances.  Squaring is a monotone transform, so every pruning comparison
is unaffected, and it saves a square root in the innermost loops.  Only
search/reporting surfaces convert back to rooted distances.  Keep this in
mind when inspecting dumped pool state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ParamError

# Reserved neighbor id marking an empty / removed pool slot.  ids are
# int32, so -1 is the all-ones bit pattern and can never collide with a
# real vertex id (0 <= id < N <= 2**31 - 1).
TOMBSTONE = np.int32(-1)

MAX_POINTS = 2**31 - 1


class NeighborEntry(NamedTuple):
    """One pool slot: neighbor id plus squared distance to the pool owner."""

    id: int
    dist: float

    @property
    def valid(self) -> bool:
        return self.id != TOMBSTONE


@dataclass
class Dataset:
    """N vectors of dimension D, stored row-major as float32.

    Invariants (checked by :meth:`validate`): N >= 2, D >= 1, every value
    finite.  Construction itself is permissive so loaders can return e.g.
    an empty dataset that is rejected later by ``validate_params``.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ParamError(f"dataset must be 2-D (N, D), got shape {arr.shape}")
        self.data = arr

    @property
    def num_points(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def validate(self) -> None:
        if self.num_points < 2:
            raise ParamError(f"dataset needs N >= 2 points, got {self.num_points}")
        if self.num_points > MAX_POINTS:
            raise ParamError(f"dataset exceeds the {MAX_POINTS} point id limit")
        if self.dim < 1:
            raise ParamError("dataset needs D >= 1 dimensions")
        if not np.all(np.isfinite(self.data)):
            raise ParamError("dataset contains non-finite values")


@dataclass(frozen=True)
class BuildParams:
    """Construction parameters.

    S     initial random neighbors per vertex
    R     pool capacity (maximum neighbors per vertex)
    T1    outer iterations
    T2    inner iterations per outer iteration
    rho   reverse-edge sampling ratio in (0, 1]
    seed  RNG seed; fixing it makes builds replayable
    workers  parallel worker count (>= 1); ignored by the numpy backend
    """

    S: int = 8
    R: int = 32
    T1: int = 3
    T2: int = 6
    rho: float = 0.6
    seed: int = 0
    workers: int = 1


def validate_params(params: BuildParams, n: int) -> None:
    """Check every BuildParams bound against a dataset of ``n`` points.

    Raises ParamError naming the violated bound.
    """
    if n < 2:
        raise ParamError(f"need n >= 2 points, got {n}")
    if params.S < 1:
        raise ParamError("S >= 1")
    if params.S > params.R:
        raise ParamError("S <= R")
    if params.R > n - 1:
        raise ParamError("R <= N-1")
    if params.T1 < 1:
        raise ParamError("T1 >= 1")
    if params.T2 < 1:
        raise ParamError("T2 >= 1")
    if not (0.0 < params.rho <= 1.0):
        raise ParamError("rho in (0,1]")
    if params.workers < 1:
        raise ParamError("workers >= 1")


@dataclass
class DoubleBufferPool:
    """Read-only view of one vertex's double-buffered neighbor pool.

    ``read_*``/``write_*`` are row views into the build state arrays; both
    have fixed capacity R and never grow.  Slots with id == TOMBSTONE are
    empty.  Within one buffer no two valid slots share an id (checked at
    round boundaries).
    """

    owner: int
    read_ids: np.ndarray
    read_dists: np.ndarray
    write_ids: np.ndarray
    write_dists: np.ndarray
    write_count: int

    def read_entries(self) -> list[NeighborEntry]:
        return [
            NeighborEntry(int(i), float(d))
            for i, d in zip(self.read_ids, self.read_dists)
            if i != TOMBSTONE
        ]

    def write_entries(self) -> list[NeighborEntry]:
        return [
            NeighborEntry(int(i), float(d))
            for i, d in zip(self.write_ids, self.write_dists)
            if i != TOMBSTONE
        ]


@dataclass
class Graph:
    """Final adjacency in CSR layout: ``neighbor_ids[offsets[v]:offsets[v+1]]``."""

    num_vertices: int
    offsets: np.ndarray
    neighbor_ids: np.ndarray
    max_degree_bound: int = field(default=0)  # R used at build time, 0 = unknown

    def __post_init__(self) -> None:
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        self.neighbor_ids = np.ascontiguousarray(self.neighbor_ids, dtype=np.int32)

    def neighbors(self, v: int) -> np.ndarray:
        return self.neighbor_ids[self.offsets[v] : self.offsets[v + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def validate(self, max_degree: int | None = None) -> None:
        """Check the CSR invariants; raises ParamError on violation."""
        n = self.num_vertices
        if self.offsets.shape != (n + 1,):
            raise ParamError(f"offsets must have length N+1 = {n + 1}")
        if self.offsets[0] != 0:
            raise ParamError("offsets[0] must be 0")
        if self.offsets[-1] != len(self.neighbor_ids):
            raise ParamError("offsets[N] must equal len(neighbor_ids)")
        deg = np.diff(self.offsets)
        if np.any(deg < 0):
            raise ParamError("offsets must be non-decreasing")
        if max_degree is None:
            max_degree = self.max_degree_bound or None
        if max_degree is not None and np.any(deg > max_degree):
            raise ParamError(f"degree exceeds bound {max_degree}")
        if n == 0:
            return
        if len(self.neighbor_ids):
            if self.neighbor_ids.min() < 0 or self.neighbor_ids.max() >= n:
                raise ParamError("neighbor id out of range")
            owners = np.repeat(np.arange(n, dtype=np.int64), deg)
            if np.any(self.neighbor_ids == owners):
                raise ParamError("self-loop present")
            # duplicate check: sort ids within each vertex slice and look
            # for equal adjacent entries belonging to the same owner
            order = np.lexsort((self.neighbor_ids, owners))
            so, si = owners[order], self.neighbor_ids[order]
            dup = (so[1:] == so[:-1]) & (si[1:] == si[:-1])
            if np.any(dup):
                raise ParamError("duplicate neighbor id within one vertex")
