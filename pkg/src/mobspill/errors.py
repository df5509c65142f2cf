"""Exception and warning types shared across the package."""


class ZeroRowSum(ValueError):
    """A mobility-matrix row sums to zero; no time observed for that region."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"mobility matrix row {row} sums to zero")


class DimensionMismatch(ValueError):
    """Array shapes are inconsistent with each other."""


class ParseError(ValueError):
    """A file or option string could not be parsed."""


class InvariantViolation(ValueError):
    """Input data violates a declared domain invariant."""


class DegenerateColumn(ValueError):
    """An exposure column is constant and cannot be expanded."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is constant; basis expansion undefined")


class MissingOutcome(ValueError):
    """The operation needs an outcome vector but the panel has none."""


class DegenerateDenominator(ValueError):
    """A closed-form denominator is zero for these parameters."""


class NumericalFailure(RuntimeError):
    """A posterior covariance failed its SPD factorization (after jitter retry)."""

    def __init__(self, message: str, sweep: int | None = None):
        self.sweep = sweep
        if sweep is not None:
            message = f"{message} (sweep {sweep})"
        super().__init__(message)


class ExtrapolationWarning(UserWarning):
    """An estimand was evaluated outside the per-coordinate training range."""


class InsufficientDraws(UserWarning):
    """A Monte-Carlo evaluation was requested with too few draws."""
