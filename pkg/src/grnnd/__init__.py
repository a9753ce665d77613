"""Sparse nearest-neighbor graph construction and search.

Build sparse proximity graphs with the parallel disordered-propagation
builder (:func:`build`) or the sequential baseline (:func:`build_seq`),
search them with a greedy beam (:func:`greedy_search`), and score recall
against brute-force ground truth.  Hot kernels run under numba by
default; set ``GRNND_BACKEND=numpy`` for the pure-numpy fallback.
"""

from .backend import active_backend, set_backend
from .builder import (
    BuildState,
    RoundStats,
    build,
    cooperative_insert,
    finalize_graph,
    init_neighbors,
    reverse_edge_sampling,
    rng_redirect_check,
    update_round,
    validate_state,
)
from .core import (
    TOMBSTONE,
    BuildParams,
    Dataset,
    DoubleBufferPool,
    Graph,
    NeighborEntry,
    validate_params,
)
from .errors import (
    DimensionMismatch,
    EmptyGraph,
    FormatError,
    GrnndError,
    LengthMismatch,
    ParamError,
    SelfInsert,
)
from .io import (
    generate,
    read_fvecs,
    read_graph,
    read_ivecs,
    write_fvecs,
    write_graph,
    write_ivecs,
)
from .metric import euclidean, euclidean_sq
from .search import (
    SearchParams,
    brute_force_knn,
    brute_force_knn_batch,
    greedy_search,
    mean_recall,
    recall_at_k,
    search_batch,
)
from .sequential import CandidateList, build_seq, update_neighbors_seq

__version__ = "0.1.0"

__all__ = [
    "BuildParams",
    "BuildState",
    "CandidateList",
    "Dataset",
    "DimensionMismatch",
    "DoubleBufferPool",
    "EmptyGraph",
    "FormatError",
    "Graph",
    "GrnndError",
    "LengthMismatch",
    "NeighborEntry",
    "ParamError",
    "RoundStats",
    "SearchParams",
    "SelfInsert",
    "TOMBSTONE",
    "active_backend",
    "build",
    "build_seq",
    "brute_force_knn",
    "brute_force_knn_batch",
    "cooperative_insert",
    "euclidean",
    "euclidean_sq",
    "finalize_graph",
    "generate",
    "greedy_search",
    "init_neighbors",
    "mean_recall",
    "read_fvecs",
    "read_graph",
    "read_ivecs",
    "recall_at_k",
    "reverse_edge_sampling",
    "rng_redirect_check",
    "search_batch",
    "set_backend",
    "update_neighbors_seq",
    "update_round",
    "validate_params",
    "validate_state",
    "write_fvecs",
    "write_graph",
    "write_ivecs",
]
