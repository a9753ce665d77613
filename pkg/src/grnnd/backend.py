"""Kernel backend selection.

Hot loops exist twice: numba ``@njit`` kernels (default) and a pure-numpy
fallback.  The env flag ``GRNND_BACKEND`` picks one:

    GRNND_BACKEND=numba   force numba (error if numba is unavailable)
    GRNND_BACKEND=numpy   force the pure-numpy fallback
    GRNND_BACKEND=auto    numba when importable, else numpy (default)

``set_backend()`` overrides the flag programmatically (used by tests and
the backend benchmark).  Both backends implement the same kernel-module
interface and the same counter-based RNG, so results differ only by
float summation order.
"""

from __future__ import annotations

import os
import warnings

_BACKENDS = ("numba", "numpy")
_override: str | None = None


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def set_backend(name: str | None) -> None:
    """Force a backend ('numba' or 'numpy'); None restores env/auto."""
    global _override
    if name is not None and name not in _BACKENDS:
        raise ValueError(f"backend must be one of {_BACKENDS}, got {name!r}")
    _override = name


def active_backend() -> str:
    """Resolve the backend name currently in effect."""
    if _override is not None:
        return _override
    env = os.environ.get("GRNND_BACKEND", "auto").lower()
    if env in _BACKENDS:
        if env == "numba" and not _numba_available():
            raise ImportError("GRNND_BACKEND=numba but numba is not importable")
        return env
    if env not in ("auto", ""):
        raise ValueError(f"GRNND_BACKEND must be numba|numpy|auto, got {env!r}")
    if _numba_available():
        return "numba"
    warnings.warn("numba not importable; falling back to the pure-numpy kernels")
    return "numpy"


def get_kernels():
    """Return the kernel module for the active backend."""
    if active_backend() == "numba":
        from . import _numba_kernels as mod
    else:
        from . import _numpy_kernels as mod
    return mod
