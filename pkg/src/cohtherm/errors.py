"""Exception hierarchy shared by the simulation modules and the CLI."""


class CohthermError(Exception):
    """Base class for all package errors."""


class ParameterError(CohthermError, ValueError):
    """Invalid user-supplied parameter. ``field`` names the offending input when known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalError(CohthermError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class QuadratureError(NumericalError):
    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


class IntegrationError(NumericalError):
    pass
