"""Exception types shared across the solvers."""


class ConfigurationError(ValueError):
    """Invalid configuration value or inconsistent grid setup."""


class GateError(RuntimeError):
    """A smallness precondition gate was violated."""


class ContractionError(RuntimeError):
    """An iteration stopped contracting; carries the measured ratio."""

    def __init__(self, message: str, ratio: float | None = None, trace=None):
        super().__init__(message)
        self.ratio = ratio
        self.trace = trace


class NonConvergenceError(RuntimeError):
    """Iteration budget exhausted before the tolerance was met."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class FlatnessError(RuntimeError):
    """Parallel transport requested across a visibly curved connection."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ReconstructionError(RuntimeError):
    """No composition candidate matched the calibration oracle."""
