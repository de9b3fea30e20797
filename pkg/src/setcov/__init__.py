"""Covariograms, limit covariances and regular variation for set-indexed functionals of stationary Gaussian fields."""

from .errors import (ConfigError, GeometryError, KernelError, NearCancellationError,
                     NotRegularlyVaryingError, PotterError, QuadratureError, RefusalError,
                     SetcovError, SimulationError, UnsupportedPairError)
from .geometry import (CompactSet, CovariogramProfile, ball, box, covariogram_exact,
                       covariogram_mc, diameter_bound, indicator_fourier_decay, interval,
                       perimeter, polygon, radial_profile, shape_from_config, union, volume)
from .kernels import (CovarianceModel, berry_model, fgn_correlation, fgn_model,
                      gaussian_model, kernel_from_spec, power_model)
from .regvar import (coregvar_check, fit_rv_index, potter_certify, wt_from_spectral,
                     wt_general, wt_radial)
from .hermite import (HermiteExpansion, composed_covariance, hermite_coeffs, phi_from_spec,
                      wq, wt_composed)
from .limitcov import (LimitCovResult, limit_cov, limit_cov_matrices, limit_cov_matrix,
                       limit_cov_riesz, normalized_cov_finite_t)
from .fields import (FieldSample, Grid, integrate_functional, region_weights,
                     simulate_berry_2d, simulate_stationary_1d)

__version__ = "0.1.0"
