"""Exception hierarchy for pinchcheck."""
from typing import Optional


class PinchcheckError(ValueError):
    """Base class for all pinchcheck errors."""


class DimensionError(PinchcheckError):
    """Raised when a dimension is out of range or operands disagree in shape."""


class SymmetryError(PinchcheckError):
    """Raised when a declared symmetry or trace condition does not hold."""


class MetricError(PinchcheckError):
    """Raised for invalid metrics or charts (SPD failure, resolution, margins)."""


class ThetaSingularityError(PinchcheckError):
    """Raised when the theta coefficient is evaluated at its pole theta == 1."""


class PreconditionError(PinchcheckError):
    """Raised when a numerical precondition of a check is not met.

    Attributes:
        measured: The measured quantity that failed the precondition
        threshold: The threshold it was compared against
    """

    def __init__(self, message: str, measured: Optional[float] = None,
                 threshold: Optional[float] = None):
        super().__init__(message)
        self.measured = measured
        self.threshold = threshold


class SpecParseError(PinchcheckError):
    """Raised for malformed geometry spec files.

    Attributes:
        line: 1-based line number of the offending line (None if not line-bound)
        key: The offending key or section name
    """

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        location = f"line {line}: " if line is not None else ""
        subject = f"'{key}': " if key else ""
        super().__init__(f"{location}{subject}{message}")
        self.line = line
        self.key = key
