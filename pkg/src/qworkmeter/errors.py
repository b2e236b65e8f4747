"""Exception types shared across the package."""


class QworkmeterError(Exception):
    """Base class for all package errors."""


class FrequencyDomainError(QworkmeterError):
    """Effective qubit frequency is non-positive; thermal occupation undefined.

    Raised instead of clamping: a non-positive frequency means the model is
    being used outside its validity range and silently continuing would
    corrupt every fluctuation-theorem estimator downstream.
    """


class StepSizeError(QworkmeterError):
    """Per-step jump probability exceeds the first-order unraveling bound."""


class EmptyAggregateError(QworkmeterError):
    """An estimator was read from an aggregate with no trajectories."""


class ConfigError(QworkmeterError):
    """Configuration validation failed. Carries the full list of violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
