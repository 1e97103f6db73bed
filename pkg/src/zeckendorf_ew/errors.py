"""Exception types shared across the package."""


class ZeckError(Exception):
    """Base class for all package errors."""


class InvalidDigitsError(ZeckError, ValueError):
    """A digit set violates the Zeckendorf rules (index < 2 or adjacent indices)."""


class WeightIndexError(ZeckError, ValueError):
    """A weight was requested for an index j < 2."""


class NonConvergenceError(ZeckError, ArithmeticError):
    """A numerical limit, tail sum or quadrature failed to reach its tolerance."""


class ThetaRangeError(ZeckError, ArithmeticError):
    """|theta_k(t)| exceeds 1, outside the range where the phase extraction is controlled."""

    def __init__(self, k, t, theta):
        self.k, self.t, self.theta = k, t, theta
        super().__init__(
            f"|theta| = {abs(theta):.6g} > 1 for block k={k}, t={t}; reduce |t| or increase k"
        )


class AtomCapError(ZeckError, MemoryError):
    """The distribution DP exceeded its atom cap; use a coarser merge tolerance."""


class ConfigError(ZeckError, ValueError):
    """Invalid run configuration."""
