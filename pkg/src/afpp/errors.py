"""Exception classes shared across the package."""


class AfppError(Exception):
    pass


class DimensionCapExceeded(AfppError, ValueError):
    pass


class LevelOutOfRange(AfppError, ValueError):
    pass


class BudgetExceeded(AfppError):
    """Raised when a search runs out of budget.

    ``best`` holds the best point found so far and ``residual`` its residual,
    so callers can still use a partial answer.
    """

    def __init__(self, message, best=None, residual=None, work=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.work = work


class SamplerBudgetExceeded(BudgetExceeded):
    pass


class ContinuityModulusUnavailable(AfppError):
    pass


class UnknownInstance(AfppError, KeyError):
    pass


class ConfigError(AfppError, ValueError):
    pass
