# common/errors.py


class RodAnalysisError(Exception):
    """Root of every error raised by the toolkit."""


class DomainError(RodAnalysisError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(RodAnalysisError, ValueError):
    """Invalid grid or run configuration. `field` names the offending setting."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ShapeError(RodAnalysisError, ValueError):
    """Sampled functions live on different grids."""


class SingularityError(RodAnalysisError, ZeroDivisionError):
    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class ConvergenceError(RodAnalysisError):
    """Newton iteration did not reach its tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class SeedError(ConvergenceError):
    """Branch switching could not produce a converged seed point."""


class IndeterminateDegreeError(RodAnalysisError):
    """The reduced map has a zero too close to the sampling circle."""

    def __init__(self, message, min_norm=None):
        super().__init__(message)
        self.min_norm = min_norm
