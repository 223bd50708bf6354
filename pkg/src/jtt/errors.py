"""Exception types shared across the package."""


class JTTError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(JTTError):
    """Malformed or inconsistent input data (files, shapes, graph)."""


class DegenerateVarianceError(JTTError):
    """Pooled residual variance is zero; every edge score is undefined."""


class RankDeficientError(JTTError):
    """A design matrix does not have full column rank."""
