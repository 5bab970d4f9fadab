"""Exception types raised by the package."""


class OrkaError(Exception):
    """Base class for all package errors."""


class ShapeError(OrkaError, ValueError):
    """Array dimensions do not fit together."""


class ParameterError(OrkaError, ValueError):
    """A parameter is outside its admissible range."""


class ResolutionError(OrkaError, ValueError):
    """The grid cannot be decomposed to the requested wavelet level."""

    def __init__(self, message, max_level):
        super().__init__(f"{message} (maximal feasible level: {max_level})")
        self.max_level = max_level


class ResourceError(OrkaError, MemoryError):
    """The trellis would exceed the configured memory budget."""


class InstanceTooLargeError(ResourceError):
    """Exhaustive enumeration was requested on too many paths."""


class GridFormatError(OrkaError, ValueError):
    """Base class for malformed grid files."""


class BadMagicError(GridFormatError):
    pass


class UnsupportedVersionError(GridFormatError):
    pass


class TruncatedGridError(GridFormatError):
    pass


class DimensionOverflowError(GridFormatError):
    pass
