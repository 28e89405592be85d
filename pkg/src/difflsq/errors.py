"""Exception types shared across the package."""


class DiffLsqError(Exception):
    """Base class for all errors raised by difflsq."""


class DegenerateSystem(DiffLsqError, ArithmeticError):
    """The normal matrix is singular or could not be factorized."""


class InvalidWeight(DiffLsqError, ValueError):
    """A point weight is negative or non-finite."""


class LengthMismatch(DiffLsqError, ValueError):
    """Sequences that must have equal length do not."""


class InvalidConfig(DiffLsqError, ValueError):
    """A configuration value violates its documented range."""


class DivergedState(DiffLsqError, ArithmeticError):
    """An iterative procedure produced a non-finite loss."""


class NearInfinityPoint(DiffLsqError, ArithmeticError):
    """A point maps to (numerically) infinity under a projective transform."""

    def __init__(self, index, denominator):
        self.index = int(index)
        self.denominator = float(denominator)
        super().__init__(
            f"point {self.index} has homogeneous denominator {self.denominator:.3e}"
        )
