"""Exception types shared across the package."""


class SemvoxError(Exception):
    """Base class for package errors."""


class FormatError(SemvoxError, ValueError):
    """A binary or JSON artifact failed to parse (bad magic, truncation, bad version)."""


class SpecMismatchError(SemvoxError, ValueError):
    """Two grids that must share a GridSpec do not."""


class MetricUndefinedError(SemvoxError, ValueError):
    """A metric's denominator is zero (e.g. no evaluated voxels)."""
