"""Exception and warning types shared across the package."""


class KeypolyError(Exception):
    """Base class for all errors raised by keypoly."""


class ShapeError(KeypolyError, ValueError):
    """Two grids that must share dimensions do not."""


class BoundsError(KeypolyError, ValueError):
    """A keypoint lies outside its grid."""


class ConfigError(KeypolyError, ValueError):
    """A configuration value violates its invariant."""


class FormatError(KeypolyError, ValueError):
    """A file does not follow its declared text format."""


class EmptyInputError(KeypolyError, ValueError):
    pass


class InsufficientPointsError(KeypolyError, ValueError):
    """Fewer keypoints than needed to close a polygon."""


class DuplicatePointError(KeypolyError, ValueError):
    pass


class GenerationError(KeypolyError, RuntimeError):
    """The synthetic generator could not place a shape under its constraints."""


class DegeneratePolygonWarning(UserWarning):
    """A polygon encloses zero area and rasterizes to an empty mask."""


class GridValueError(KeypolyError, ValueError):
    """A heatmap or mask holds values outside its allowed range."""
