"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible matrix dimensions."""


class InsufficientHistoryError(ValueError):
    """A delayed measurement reaches back before the recorded history."""

    def __init__(self, message: str = "insufficient-history"):
        super().__init__(message)


class BlowupError(FloatingPointError):
    """The integrator produced a non-finite value."""

    def __init__(self, time: float, message: str = "blowup"):
        super().__init__(f"{message} at t={time!r}")
        self.time = time


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate.

    ``key`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
