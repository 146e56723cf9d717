class AderError(Exception):
    """Base class for solver errors."""


class ConfigurationError(AderError, ValueError):
    pass


class InadmissibleStateError(AderError):
    """A state with non-positive density/pressure or non-finite entries was met."""

    def __init__(self, message: str, cells=None):
        super().__init__(message)
        self.cells = cells


class DivergedIteration(AderError):
    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class PredictorFailure(AderError):
    def __init__(self, message: str, cells=None, step=None):
        super().__init__(message)
        self.cells = cells
        self.step = step


class NonContractionError(PredictorFailure):
    """Tolerance-mode predictor did not converge within its iteration cap."""


class VacuumError(AderError):
    """Riemann data generates vacuum; the exact solver does not handle it."""
