"""Exception types shared across the toolkit."""


class GpuqError(Exception):
    """Base class for toolkit errors."""


class ConditioningError(GpuqError):
    """Covariance matrix could not be factorized, even with jitter.

    Attributes
    ----------
    attempted_jitter : float
        The largest diagonal jitter that was tried before giving up.
    """

    def __init__(self, message, attempted_jitter=0.0):
        super().__init__(message)
        self.attempted_jitter = attempted_jitter


class FittingError(GpuqError):
    """All hyperparameter optimization restarts failed."""


class SelectionError(GpuqError):
    """No candidate survived model selection."""


class DegenerateOutputError(GpuqError):
    """Model output has no variance; sensitivity indices are undefined."""
