from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid spec, controls or arguments; raised before any integration runs."""


class RangeError(ValueError):
    """A requested radius or window lies outside the stored profile."""


class SeriesRadiusError(ValueError):
    """Series start radius too large for the requested absolute tolerance."""


class SolverError(RuntimeError):
    """Numerical failure at run time."""


class NoBracketError(SolverError):
    pass


class GrowthGuardError(SolverError):
    pass


class FailedLimitError(SolverError):
    pass


class NotConvergedError(SolverError):
    def __init__(self, message: str, status: str | None = None) -> None:
        super().__init__(message)
        self.status = status
