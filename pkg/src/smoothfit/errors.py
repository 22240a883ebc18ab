"""Exception types raised by the smoothfit library."""


class SmoothfitError(Exception):
    """Base class for all smoothfit-specific errors."""


class InvalidBandwidthError(SmoothfitError, ValueError):
    """A bandwidth was zero, negative, or otherwise unusable."""


class EmptyNeighborhoodError(SmoothfitError):
    """A kernel neighborhood contains no data, or no grid mass.

    Carries the axis index and the offending location so callers can
    report which covariate and where the smoother ran dry.
    """

    def __init__(self, axis, where: float, detail: str = ""):
        self.axis = axis
        self.where = where
        at = f"on axis {axis} " if axis is not None and axis >= 0 else ""
        msg = f"empty kernel neighborhood {at}at {where:.6g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SingularMomentError(SmoothfitError):
    """A local moment matrix stayed singular even after ridging."""

    def __init__(self, axis, where: float):
        self.axis = axis
        self.where = where
        at = f"on axis {axis} " if axis is not None and axis >= 0 else ""
        super().__init__(f"singular local moment matrix {at}at {where:.6g}")


class NonConvergenceError(SmoothfitError):
    """Backfitting sweeps did not reach the tolerance in time.

    ``last_change`` holds the final sweep-to-sweep sup-norm change.
    """

    def __init__(self, sweeps: int, last_change: float):
        self.sweeps = sweeps
        self.last_change = last_change
        super().__init__(
            f"backfitting did not converge in {sweeps} sweeps "
            f"(last sup-norm change {last_change:.3e})"
        )


class SelectorFailureError(SmoothfitError):
    """Every bandwidth candidate failed during selection."""


class SamplerDegenerateError(SmoothfitError):
    """Rejection sampling accepted almost nothing."""


class NumericError(SmoothfitError):
    """A numeric routine (quadrature, solve) failed to converge."""
