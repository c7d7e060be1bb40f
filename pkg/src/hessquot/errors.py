"""Exception hierarchy.

Every numerical failure derives from :class:`NumericError` so the CLI can map
it to exit code 3; configuration problems derive from :class:`ConfigError`
(exit code 2).
"""


class HessQuotError(Exception):
    """Base class for all package errors."""


class NumericError(HessQuotError):
    """A computation could not produce a trustworthy number."""

    where = "numeric"


class OrderOutOfRangeError(NumericError, ValueError):
    pass


class DegenerateDirectionError(NumericError, ValueError):
    pass


class DomainError(NumericError, ValueError):
    pass


class NoRootError(NumericError):
    """The monotone branch of the flux equation has no root for this input."""


class BracketError(NumericError):
    pass


class InadmissibleError(NumericError):
    """Parameter outside the admissible range (e.g. alpha below alpha_1)."""


class ConeViolationError(InadmissibleError):
    def __init__(self, msg, order=None, radius=None):
        super().__init__(msg)
        self.order = order
        self.radius = radius


class NotApplicableError(NumericError):
    pass


class Dim2Error(NumericError):
    """n = 2 has its own closed form; the integral constant diverges."""


class HypothesisError(NumericError, ValueError):
    """An input violates a standing hypothesis (delta too small, tau outside range, ...)."""


class SingularityError(NumericError):
    pass


class EnvelopeError(NumericError, ValueError):
    pass


class DivergenceError(NumericError):
    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = list(history or [])


class BarrierError(NumericError):
    def __init__(self, msg, worst=None, location=None):
        super().__init__(msg)
        self.worst = worst
        self.location = location


class ThresholdError(NumericError):
    def __init__(self, msg, c_tilde=None):
        super().__init__(msg)
        self.c_tilde = c_tilde


class AssemblyError(NumericError):
    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class UnderflowSignal(NumericError):
    """Remainder sits below the numeric floor across the whole fit window."""


class ConfigError(HessQuotError):
    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path
