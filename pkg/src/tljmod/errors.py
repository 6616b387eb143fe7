from __future__ import annotations


class TLJError(Exception):
    """Base class for library errors."""


class PreconditionError(TLJError, ValueError):
    """An operation was called on data that fails its documented precondition."""


class GammaMismatchError(TLJError, ValueError):
    """Two objects that must live over the same base graph do not."""


class CompositionError(TLJError, ValueError):
    """Two 2-morphisms cannot be composed."""


class UnsupportedError(TLJError, ValueError):
    """No construction is available for the requested input."""
