"""Exception hierarchy.

Every error derives from a built-in exception type as well, so callers that
only know about ``ValueError`` or ``RuntimeError`` keep working.
"""

import math
from typing import Optional


class WaveRegError(Exception):
    """Base class for all wavereg errors."""


class ArgumentError(WaveRegError, ValueError):
    """Invalid argument, configuration value or index."""


class NumericError(WaveRegError, ArithmeticError):
    """Non-finite value met while integrating or assembling."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class SolverError(WaveRegError, RuntimeError):
    """A linear factorisation or solve failed."""

    def __init__(self, message: str, condition: float = math.inf):
        self.condition = condition
        super().__init__(f"{message} (condition estimate {condition:.3e})")
