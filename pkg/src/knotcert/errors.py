"""Exception types shared across the package."""


class KnotCertError(Exception):
    """Base class for all package-specific errors."""


class CurveFileError(KnotCertError):
    """Curve or polyline file could not be parsed.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)


class ResourceLimitError(KnotCertError):
    """A configured resource cap (e.g. subdivision segment count) was exceeded."""


class RegularityError(KnotCertError):
    """The curve derivative vanishes (or cannot be bounded away from zero)."""


class SelfIntersectionError(KnotCertError):
    """The curve is not simple: two non-adjacent points (nearly) coincide."""


class BoundInfeasibleError(KnotCertError):
    """The a-priori iteration formula has a nonpositive denominator."""


class DegenerateIncidenceError(KnotCertError):
    """A polyline edge lies entirely inside a cutting plane."""


class AmbiguousProjectionError(KnotCertError):
    """Two distant parameters achieve the same minimal distance to a point."""


class DisjointSupportError(KnotCertError):
    """A point is claimed by two non-adjacent isotopy supports."""


class InconsistencyError(KnotCertError):
    """An internal invariant that should be guaranteed by prior checks failed."""
