class DimensionError(ValueError):
    """Raised when matrix shapes do not match what an operation needs."""


class RankDeficiencyError(ValueError):
    """Raised when a matrix has fewer numerically independent columns than requested."""


class ContractViolation(ValueError):
    """Raised when a geometric precondition (idempotency, tangency, base point...) fails."""


class EvaluationError(ValueError):
    """Raised when a symbol evaluates to a non-finite value on a sample."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class ConditioningError(ValueError):
    """Raised when a linear pullback is too ill-conditioned to trust."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class StepSizeError(ValueError):
    """Raised when consecutive path samples are too far apart to transport."""

    def __init__(self, message, step=None, size=None):
        super().__init__(message)
        self.step = step
        self.size = size


class ChartError(ValueError):
    """Raised at the pole of a stereographic chart."""


class QuadratureDomainError(ValueError):
    """Raised when a Gaussian quadrature leaves the region where it converges."""
