"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Two objects that must share a time grid do not."""


class GridResolutionError(ValueError):
    """The sampling grid cannot represent the requested physics.

    Raised for under-resolved bandwidths, truncated pulses and grids above the
    sample cap.  The CLI maps it to a dedicated exit code.
    """
