"""Exception types shared across the package."""


class LrpercError(ValueError):
    """Base class for domain errors (CLI maps these to exit code 1)."""


class DomainError(LrpercError):
    pass


class DegenerateScale(LrpercError):
    pass


class SelfLoop(LrpercError):
    pass


class TooLarge(LrpercError):
    pass


class InvalidTiling(LrpercError):
    pass


class OverlapError(LrpercError):
    pass


class GapTooSmall(LrpercError):
    pass


class LengthMismatch(LrpercError):
    pass


class NoConditioningEvents(LrpercError):
    pass


class AdjustmentDidNotConverge(RuntimeError):
    pass


class SoundnessViolation(AssertionError):
    """A renormalization certificate disagreed with direct reachability."""
