"""Exception hierarchy.

Every error carries an ``exit_code`` used by the CLI: 2 for input and
usage problems, 3 for missing artifacts, 4 for numeric failures.
"""


class MedalcastError(Exception):
    exit_code = 2


class SchemaError(MedalcastError, ValueError):
    """Malformed input file: missing column, duplicate key, bad header."""


class UnknownAliasError(MedalcastError, KeyError):
    """A country name that the NOC registry cannot resolve."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ImputationError(MedalcastError, ValueError):
    """A missing value that cannot be filled from its neighbours."""


class ConsistencyError(MedalcastError, ValueError):
    """Cross-file disagreement, e.g. a tally for a year with no Games."""


class UnknownCategoryError(MedalcastError, KeyError):
    """A categorical value absent from the embedding codebook."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnknownSportError(UnknownCategoryError):
    pass


class DomainRangeError(MedalcastError, ValueError):
    """A count or index outside its declared domain."""


class ShapeError(MedalcastError, ValueError):
    pass


class InsufficientDataError(MedalcastError, ValueError):
    pass


class DegenerateError(MedalcastError, ValueError):
    """Input for which the statistic is undefined (zero variance, zero margin)."""


class NumericError(MedalcastError, ArithmeticError):
    exit_code = 4


class IterationLimitError(NumericError):
    pass


class FitError(NumericError):
    """ARIMA fit failure; ``last_iterate`` holds the optimizer's final point."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class SelectionError(NumericError):
    def __init__(self, message, failures=None):
        super().__init__(message)
        self.failures = failures or {}


class TrainingError(NumericError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class StateError(MedalcastError, RuntimeError):
    exit_code = 3


class UndefinedTestError(DegenerateError):
    pass


class PartitionError(MedalcastError, ValueError):
    pass


class AttributionError(MedalcastError, RuntimeError):
    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset
