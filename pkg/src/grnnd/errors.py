"""Exception types shared across the package."""


class GrnndError(Exception):
    """Base class for all errors raised by this package."""


class ParamError(GrnndError, ValueError):
    """A build or generation parameter violates its documented bound."""


class FormatError(GrnndError, ValueError):
    """A file is malformed: bad magic, truncated record, inconsistent
    dimension, non-finite payload, or trailing garbage."""


class DimensionMismatch(GrnndError, ValueError):
    """Two vectors (or a query and a dataset) disagree on dimension."""


class SelfInsert(GrnndError, ValueError):
    """A pool was asked to insert its own owner (programming error)."""


class EmptyGraph(GrnndError, ValueError):
    """Search was attempted on a graph with no vertices."""


class LengthMismatch(GrnndError, ValueError):
    """Recall was asked to compare id lists of different lengths."""
