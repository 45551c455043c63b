"""Exception hierarchy shared by all modules."""


class KernelSPVError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(KernelSPVError, ValueError):
    """Invalid user-supplied configuration (CLI exit code 2)."""


class NumericalError(KernelSPVError, ArithmeticError):
    """Base for numerical failures (CLI exit code 3)."""


class NonFiniteInput(NumericalError, ValueError):
    pass


class AllTruncated(NumericalError):
    """No eigen/singular value survived the truncation threshold."""


class FactorizationFailed(NumericalError):
    pass


class EigenFailed(NumericalError):
    pass


class NumericalInconsistency(NumericalError):
    """A quantity left its mathematically admissible range by more than tolerance."""


class EmptyDecomposition(NumericalError):
    pass


class SubspaceExhausted(NumericalError):
    pass


class DimensionMismatch(KernelSPVError, ValueError):
    pass


class InvalidBox(ConfigError):
    pass


class InvalidCount(ConfigError):
    pass
