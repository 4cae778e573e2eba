"""Exception types raised across the package."""


class LtnetError(Exception):
    """Base class for all package errors."""


class ShapeError(LtnetError, ValueError):
    """An array has the wrong shape or contains non-finite entries."""


class LimitExceeded(LtnetError):
    """An exhaustive computation was refused because the size is over its limit."""

    def __init__(self, what, size, limit):
        self.what = what
        self.size = size
        self.limit = limit
        super().__init__(
            f"{what}: dimension {size} exceeds the exhaustive limit of {limit}")


class AssumptionViolated(LtnetError, ValueError):
    """A mode matrix I - Sigma W is (numerically) singular."""


class RangeConditionError(LtnetError, ValueError):
    """range([W^-- W^-+]) is not contained in range(B^-)."""


class StepSizeError(LtnetError, ValueError):
    """The integration step is too large for the network time constant."""


class NetworkFileError(LtnetError, ValueError):
    """A network-spec document failed validation; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"field '{field}': {message}")
