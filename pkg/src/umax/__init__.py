"""Extremes of symmetric kernels over k-subsets of random points on the sphere and ball.

Sampling laws, brute-force extremal evaluation, Weibull limit laws, a finite-n
Poisson approximation bound and a reproducible Monte Carlo engine.
"""

from .specfun import DomainError, beta, bessel_i, ln_gamma, log_bessel_i, log_binomial
from .sphere import (DirectionalLaw, PointLaw, PointStream, RadialLaw, overlap_antipodal,
                     overlap_self, sample_direction, sample_point, sample_points, sample_radius,
                     vmf_normalizer)
from .kernels import (KERNELS, InsufficientSampleError, Kernel, angle_kernel, distance_kernel,
                      exceedance_count, get_kernel, perimeter_kernel, scalar_kernel, u_max,
                      u_max_batch)
from .limits import (LimitLaw, cdf, diameter_law, min_angle_law, perimeter_law, scalar_law,
                     tail_slope)
from .poisson import (BoundReport, TauEstimate, UndefinedRatioError, estimate_exceed_prob,
                      estimate_tau, lambda_value, poisson_bound, verify_bound, verify_bounds)
from .experiment import (EmpiricalCdf, ExperimentConfig, ResourceCapExceeded, StudyResult,
                         TrialSet, convergence_study, exact_min_spacing_survival, ks_statistic,
                         run_trials)

__version__ = "0.1.0"
