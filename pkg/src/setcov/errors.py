"""Exception hierarchy shared by all modules."""


class SetcovError(Exception):
    """Base class for errors raised by setcov."""


class GeometryError(SetcovError, ValueError):
    """Invalid shape description or unsupported shape operation."""


class UnsupportedPairError(GeometryError):
    """No exact covariogram path exists for this pair; use covariogram_mc."""


class QuadratureError(SetcovError, RuntimeError):
    """Adaptive refinement did not converge.

    ``estimates`` holds the last two (coarse, fine) estimates.
    """

    def __init__(self, message, estimates=None):
        super().__init__(message)
        self.estimates = estimates


class NotRegularlyVaryingError(SetcovError, ValueError):
    """A regular-variation fit was refused (e.g. sign changes of w_t)."""


class PotterError(SetcovError, RuntimeError):
    """No Potter threshold was found on the search grid."""


class NearCancellationError(SetcovError, ArithmeticError):
    """Normalisation w_t is too close to zero to be trusted."""


class SimulationError(SetcovError, RuntimeError):
    """Field simulation failed (e.g. covariance not positive semidefinite)."""


class ConfigError(SetcovError, ValueError):
    """Experiment configuration failed validation."""


class RefusalError(SetcovError):
    """An experiment refused to produce a number (see message for diagnosis)."""


class KernelError(SetcovError, ValueError):
    """Unknown kernel spec, invalid parameter, or table extrapolation."""
