"""Exception hierarchy shared by every module.

The CLI maps :class:`ConfigError` to exit code 2 and :class:`DivergenceError`
to exit code 3; everything else is a programming error.
"""


class SparcError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SparcError, ValueError):
    """Invalid parameters or configuration; ``field`` names the culprit."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class InputSizeError(SparcError, ValueError):
    """An input sequence has the wrong length."""


class ScaleError(SparcError, ValueError):
    """A request exceeds the search budget of an exhaustive routine."""


class DivergenceError(SparcError, ArithmeticError):
    """Non-finite values appeared during an iterative decoder."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class NotDecodableError(SparcError, ValueError):
    """The requested rate is at or above the relevant capacity."""


class InfeasibleError(SparcError, ValueError):
    """No admissible solution exists (e.g. no MAC bracket fits the budget)."""


class UndefinedPosteriorError(SparcError, ValueError):
    """Bit posteriors requested for a section whose weights are all zero."""


class InterfaceError(SparcError, ValueError):
    """An external callback returned data of the wrong shape."""
