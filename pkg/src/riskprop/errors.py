"""Exception types shared across the package."""


class RiskpropError(Exception):
    """Base class for all errors raised by riskprop."""


class InputError(RiskpropError, ValueError):
    """Malformed or inconsistent input data (files, config, arguments).

    The CLI maps this to exit code 2.
    """


class UndefinedScoreError(RiskpropError, ArithmeticError):
    """A smoothed score has a zero denominator (k = 0 and no observations)."""


class UndefinedCentroidError(RiskpropError, ValueError):
    """A raster has no positive mass, so its centroid does not exist."""
