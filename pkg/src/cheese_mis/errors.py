"""Exception hierarchy shared by all solver modules."""


class CheeseError(Exception):
    """Base class for every error raised by the package."""


class EmbeddingError(CheeseError):
    pass


class DegenerateMetricError(CheeseError):
    pass


class InvalidObjectError(CheeseError):
    pass


class NotIndependentError(CheeseError):
    pass


class GenerationError(CheeseError):
    pass


class InvalidCycleError(CheeseError):
    pass


class ConsistencyError(CheeseError):
    """An internal structural guarantee was violated (should never fire)."""


class PreconditionError(CheeseError):
    pass


class ParameterError(CheeseError):
    pass


class SamplingFailure(CheeseError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BudgetError(CheeseError):
    pass
