"""Exception hierarchy shared across the package."""


class RelqaError(Exception):
    """Base class for all package errors."""


class DimensionError(RelqaError, ValueError):
    """Array shapes are inconsistent with an operation's contract."""


class NonFiniteError(RelqaError, FloatingPointError):
    """A NaN or Inf appeared where finite values are required."""


class DataFormatError(RelqaError, ValueError):
    """An input file could not be parsed.

    ``location`` is a human-readable position such as ``"line 12"`` or
    ``"byte 4096"``.
    """

    def __init__(self, message, path=None, location=None):
        self.path = path
        self.location = location
        parts = [str(p) for p in (path, location) if p is not None]
        prefix = ":".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
