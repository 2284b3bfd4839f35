"""Exception hierarchy shared by all modules."""


class RlassoError(Exception):
    """Base class for every error raised by this package."""


class UnsupportedNormError(RlassoError, ValueError):
    pass


class DimensionError(RlassoError, ValueError):
    pass


class DomainError(RlassoError, ValueError):
    pass


class NumericalError(RlassoError, ArithmeticError):
    pass


class RankDeficientError(NumericalError):
    pass


class InfeasibleError(RlassoError):
    pass


class UnboundedError(RlassoError):
    pass


class CycleLimitError(NumericalError):
    pass


class ThresholdError(DomainError):
    """Tuning parameter at or below the recovery threshold."""


class InsufficientMeasurementsError(DomainError):
    """The Gaussian phase-transition expression is not positive."""


class NspViolation(RlassoError):
    """The matrix fails the l1 null space property; ``witness`` is a kernel vector."""

    def __init__(self, message, witness=None, support=None):
        super().__init__(message)
        self.witness = witness
        self.support = support


class BudgetExceeded(RlassoError):
    pass


class BracketError(RlassoError):
    pass


class InconclusiveError(RlassoError):
    """A solve hit its iteration limit, so recovery could not be decided."""


class ConfigError(RlassoError, ValueError):
    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
