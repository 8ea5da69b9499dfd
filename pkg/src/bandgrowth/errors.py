"""Exception hierarchy. CLI exit codes hang off ``exit_code``."""


class BandGrowthError(Exception):
    exit_code = 5


class UsageError(BandGrowthError, ValueError):
    exit_code = 2


class ConfigMismatch(UsageError):
    """Operands live in different windows or fields."""


class DeclaredCurveViolation(BandGrowthError):
    """An entry rule produced a nonzero outside its declared band."""

    exit_code = 4


class OutOfRange(UsageError):
    pass


class ExponentOutOfRange(OutOfRange):
    pass


class NotAStretch(OutOfRange):
    pass


class PaddingRequired(UsageError):
    pass


class ShapeMismatch(UsageError):
    pass


class SlotCollision(UsageError):
    pass


class ZeroProfile(BandGrowthError, ValueError):
    exit_code = 4


class WindowExhausted(BandGrowthError):
    exit_code = 3


class NotColumnFinite(BandGrowthError):
    exit_code = 4


class NotAnIdempotentImage(BandGrowthError):
    exit_code = 4


class RecipeNotFound(BandGrowthError):
    exit_code = 5


class SampleLimitExceeded(BandGrowthError):
    exit_code = 6
