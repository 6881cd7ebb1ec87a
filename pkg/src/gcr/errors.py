"""Exception hierarchy shared by every module of the package."""


class GCRError(Exception):
    """Base class for all errors raised by :mod:`gcr`."""


class NotPositiveDefinite(GCRError, ValueError):
    pass


class DowndateSingular(GCRError, ValueError):
    pass


class EmptyInput(GCRError, ValueError):
    pass


class DomainError(GCRError, ValueError):
    pass


class EmptyCluster(GCRError, ValueError):
    pass


class NonConvergence(GCRError, RuntimeError):
    pass


class EigenFailure(GCRError, RuntimeError):
    pass


class DegenerateAngle(GCRError, ValueError):
    pass


class LengthMismatch(GCRError, ValueError):
    pass


class TooLarge(GCRError, ValueError):
    pass


class QuadratureFailure(GCRError, RuntimeError):
    pass


class ConfigError(GCRError, ValueError):
    pass
