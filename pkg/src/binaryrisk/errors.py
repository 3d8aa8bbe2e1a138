"""Exception types shared across the package."""


class BinaryRiskError(Exception):
    """Base class for every error raised by this package."""


class InvalidParamsError(BinaryRiskError, ValueError):
    """An input violates a domain constraint (range, sign, or rr*p0 <= 1)."""


class DegenerateScenarioError(BinaryRiskError, ValueError):
    """A quantity is undefined because a required denominator vanishes."""


class TargetUnreachableError(BinaryRiskError, ValueError):
    """An inverse solve asked for a value outside the achievable range."""


class NoConvergenceError(BinaryRiskError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""


class RenderError(BinaryRiskError, ValueError):
    """Figure rendering was asked to draw something unrenderable."""
