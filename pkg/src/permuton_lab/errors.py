"""Exception types raised across the package."""


class PermutonLabError(Exception):
    """Base class for all errors raised by permuton_lab."""


class DuplicateCoordinate(PermutonLabError, ValueError):
    """Two points share an x- or a y-coordinate, so no permutation is induced."""


class SizeLimitExceeded(PermutonLabError, ValueError):
    pass


class ParameterOutOfRange(PermutonLabError, ValueError):
    pass


class SingularPoint(PermutonLabError, ValueError):
    """A density was evaluated exactly on its (Lebesgue-null) singular set."""


class DegenerateDesign(PermutonLabError, ValueError):
    pass


class InvariantViolation(PermutonLabError, AssertionError):
    """A deterministic inequality failed; this always indicates a bug."""
