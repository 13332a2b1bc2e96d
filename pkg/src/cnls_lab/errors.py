"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two fields live on different grids."""


class BoundaryDecayError(ValueError):
    """A field does not decay at the box boundary, so a position-space
    quantity (variance, rescaling) would be contaminated by wrap-around."""


class SupportError(ValueError):
    """A coordinate rescaling would move significant amplitude outside
    the periodic box."""


class ConstraintError(ValueError):
    """A constraint specification is invalid for the given parameters,
    or a field cannot be projected onto the requested constraint set."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""
