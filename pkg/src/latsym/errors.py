"""Exception hierarchy shared by every latsym module."""


class LatsymError(Exception):
    """Base class for all errors raised by latsym."""


class WindowError(LatsymError, IndexError):
    """An index or stencil falls outside the window a field is defined on."""


class NonUniformGridError(LatsymError, ValueError):
    """A uniform-spacing operator was applied along a non-uniform axis."""


class SamplerInfeasible(LatsymError):
    """A solution sampler could not construct an exact solution window."""


class ConstraintError(LatsymError, ValueError):
    """A reduction parameter violates the constraint that makes it well posed."""


class DomainError(LatsymError, ValueError):
    """A formula was evaluated outside its domain (pole, negative radicand...)."""


class RecurrenceViolation(LatsymError, AssertionError):
    """An identity that must hold exactly failed; indicates a bug, never data."""
