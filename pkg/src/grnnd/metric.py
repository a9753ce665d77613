"""Euclidean distance.

The accumulation order inside the active backend is free by contract:
only agreement with a plain sequential scalar sum to 1e-5 relative error
is promised, plus exact symmetry (guaranteed because the summand
(a[d]-b[d])**2 is symmetric in the arguments for every chunking).  The
numba backend currently accumulates strictly sequentially in float32 so
that every call site yields bit-identical values; the numpy backend uses
numpy's pairwise reduction.

Pools store squared distances; :func:`euclidean_sq` is the primitive used
during construction, :func:`euclidean` is the reporting surface.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import get_kernels
from .errors import DimensionMismatch


def _as_vec(x) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def euclidean_sq(a, b) -> float:
    """Sum of squared coordinate differences."""
    va, vb = _as_vec(a), _as_vec(b)
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatch(f"dimension mismatch: {va.shape[0]} vs {vb.shape[0]}")
    if va.shape[0] < 1:
        raise DimensionMismatch("vectors must have dimension >= 1")
    return float(get_kernels().sqdist(va, vb))


def euclidean(a, b) -> float:
    """Euclidean distance, sqrt of :func:`euclidean_sq`."""
    return math.sqrt(euclidean_sq(a, b))
