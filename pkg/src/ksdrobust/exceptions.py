"""Exception hierarchy shared by the estimators and the experiment runner."""


class KsdError(ValueError):
    """Base class for all errors raised by this package."""


class ConfigurationError(KsdError):
    """Invalid experiment or sampling configuration."""


class ParameterError(KsdError):
    """A tuning parameter lies outside its admissible range."""


class DimensionError(KsdError):
    """The data matrix has too few observations for its dimension."""


class DegenerateDataError(KsdError):
    """Data (or a retained subset) has no usable dispersion."""


class DegenerateProjectionError(KsdError):
    """Every projection of the data has zero spread."""


class DegenerateScaleError(KsdError):
    """The M-scale equation has no positive solution."""


class DomainError(KsdError):
    """A matrix argument is not symmetric positive definite."""


class EstimationFailure(KsdError):
    """The iterative estimator could not proceed.

    The ``diagnostics`` attribute carries whatever state was available
    when the failure occurred.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
