"""Exception hierarchy shared by every module.

The CLI maps ``ValidationError`` to exit code 2 and ``NumericalError`` to
exit code 3, so library code should raise one of these two families.
"""

from __future__ import annotations


class GameLifeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GameLifeError, ValueError):
    """Bad input: malformed data, violated invariant, unmet precondition."""


class ObserverLimitError(ValidationError):
    """A lifecycle query that cannot be answered without external metadata."""


class NumericalError(GameLifeError, RuntimeError):
    """A computation could not reach its stated tolerance."""


class ConvergenceError(NumericalError):
    """Optimizer failed on every restart; ``best`` holds the best-so-far result."""

    def __init__(self, message: str, best: object = None) -> None:
        super().__init__(message)
        self.best = best


class StepTooLargeError(NumericalError):
    """A fixed-step integrator overshot zero on its first step."""
