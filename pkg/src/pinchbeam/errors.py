"""Exception hierarchy shared by every pinchbeam module."""


class PinchError(Exception):
    """Base class for all library errors."""


class InvalidConfigError(PinchError, ValueError):
    """A scenario or plan parameter is out of its valid domain."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConstraintViolationError(PinchError):
    """A pinching-antenna layout violates the span or spacing constraint."""


class DegenerateGeometryError(PinchError):
    """A user and an antenna coincide (zero propagation distance)."""


class DegenerateChannelError(PinchError):
    """The effective channel is identically zero."""


class SingularChannelError(PinchError):
    """A Gram matrix needed by a zero-forcing stage is rank deficient."""


class SchemeInfeasibleError(PinchError):
    """The requested linear scheme cannot serve this many users (K > M)."""


class SingularUpdateError(PinchError, ArithmeticError):
    """A rank-one update has a vanishing denominator."""


class PlanFailedError(PinchError):
    """Too many Monte-Carlo trials of an experiment failed."""
