"""Exception hierarchy for the package."""


class CableArmError(Exception):
    """Base class for all errors raised by cablearm."""


class ValidationError(CableArmError, ValueError):
    """Input failed a precondition or a type invariant."""


class ConfigError(ValidationError):
    """An arm configuration document could not be parsed or validated.

    ``location`` is a human readable pointer into the document, e.g.
    ``"line 12, column 5"`` or ``"limits[1]"``.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class ConstraintViolation(ValidationError):
    """Expanded joint vector is inconsistent with the constraint matrix."""


class SingularityError(CableArmError, ArithmeticError):
    """Undamped inversion requested at a singular configuration."""
