"""Exception hierarchy shared by every stage of the pipeline."""


class RoughSwitchError(Exception):
    """Base class for all library errors."""


# data ingestion
class MalformedRow(RoughSwitchError, ValueError):
    pass


class EmptySeries(RoughSwitchError, ValueError):
    pass


class NonPositivePrice(RoughSwitchError, ValueError):
    pass


class NoMatch(RoughSwitchError, LookupError):
    pass


# numerics
class DegenerateWindow(RoughSwitchError, ArithmeticError):
    pass


class DegenerateSeries(RoughSwitchError, ArithmeticError):
    pass


class InsufficientData(RoughSwitchError, ValueError):
    pass


class NonFiniteInput(RoughSwitchError, ValueError):
    pass


class ShapeMismatch(RoughSwitchError, ValueError):
    pass


class LengthMismatch(ShapeMismatch):
    pass


class InvalidParams(RoughSwitchError, ValueError):
    pass


class IndexOutOfRange(RoughSwitchError, IndexError):
    pass


class UnknownChannel(RoughSwitchError, KeyError):
    pass


class NotGroupLike(RoughSwitchError, ValueError):
    pass


class SingularSystem(RoughSwitchError, ArithmeticError):
    pass


class NonFiniteLoss(RoughSwitchError, ArithmeticError):
    pass


class StageError(RoughSwitchError):
    """Wraps an error raised inside a pipeline stage with the stage label."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
