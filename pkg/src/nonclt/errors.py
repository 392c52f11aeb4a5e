"""Exception types raised across the package."""


class NoncltError(Exception):
    """Base class for all errors raised by :mod:`nonclt`."""


class InvalidParams(NoncltError, ValueError):
    pass


class InvalidDistribution(NoncltError, ValueError):
    """A probability table or vector failed validation."""


class StateSpaceTooLarge(NoncltError, ValueError):
    pass


class DegenerateMarginal(NoncltError, ValueError):
    pass


class NoReturn(NoncltError, ValueError):
    """A trajectory has fewer than two visits to state 0."""


class ForbiddenTransition(NoncltError, ValueError):
    """A trajectory jumps directly between -1 and +1."""


class PathTooShort(NoncltError):
    pass


class RateOutOfRange(NoncltError, ValueError):
    pass


class DegenerateEnvelope(NoncltError, ValueError):
    pass


class HorizonTooSmall(NoncltError):
    """No envelope segment inside the horizon satisfies the tangent constraints.

    Supply a longer rate sequence (larger horizon).
    """


class NumericalUnderflow(NoncltError):
    """Level generation left the binary64 range.

    ``achieved`` holds the number of levels generated before the failure.
    """

    def __init__(self, message, achieved=0):
        super().__init__(message)
        self.achieved = achieved


class ValidationFailure(NoncltError):
    """A level-parameter identity failed.

    ``check`` names the identity and ``level`` the first offending level.
    """

    def __init__(self, message, check=None, level=None):
        super().__init__(message)
        self.check = check
        self.level = level


class ScaleRatioViolation(NoncltError, ValueError):
    pass


class BoundViolation(NoncltError):
    pass


class BudgetTooSmall(NoncltError, ValueError):
    pass
