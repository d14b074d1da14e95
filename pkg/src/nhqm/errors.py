"""Exception hierarchy.

Anything deriving from :class:`NumericalError` signals a numerical failure
(nonconvergence, missing bracket, degenerate input energy).  Bad user input
raises plain :class:`ValueError`.
"""


class NumericalError(RuntimeError):
    pass


class DegenerateInterfaceError(NumericalError):
    """|kL + kR| (or one momentum) vanished; the plane-wave basis degenerates."""


class NoRootError(NumericalError):
    pass


class NonConvergenceError(NumericalError):
    pass


class CountMismatchError(NumericalError):
    pass


class InvalidRegionError(NumericalError):
    """The exterior decay constant q is not positive at the trial energy."""


class TVanishingError(NumericalError):
    pass


class IdentityViolationError(NumericalError):
    pass


class DenominatorUnderflowError(NumericalError):
    pass


class NotSeparatedError(NumericalError):
    pass


class StabilityError(NumericalError):
    pass


class GridMismatchError(ValueError):
    pass
