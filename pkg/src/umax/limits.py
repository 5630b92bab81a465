"""Weibull limit laws for rescaled U-max-statistics.

Each law states ``P(T_n <= t) -> 1 - exp(-c t^gamma)`` for the rescaled
statistic ``T_n = n^{k/gamma} |extreme - H_n|``, where ``extreme`` is the
supremum (max kernels) or infimum (min kernels) of the kernel and ``k`` its
degree. Coefficients are assembled in log space through ``ln_gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .specfun import DomainError, ln_gamma

__all__ = [
    "LimitLaw",
    "diameter_law",
    "scalar_law",
    "min_angle_law",
    "perimeter_law",
    "cdf",
    "tail_slope",
    "sphere_diameter_coefficient",
    "PERIMETER_SLOPE",
]

PERIMETER_SLOPE = 4.0 / (3.0 * math.pi)


@dataclass(frozen=True)
class LimitLaw:
    """``1 - exp(-coefficient * t^gamma)`` for ``T_n = n^scale_power |extreme - H_n|``.

    ``sigma`` is the tail slope of a single kernel value,
    ``P(|extreme - h| <= s) ~ sigma s^gamma``, and ``coefficient = sigma / degree!``.
    """

    law_id: str
    gamma: float
    sigma: float
    degree: int
    extreme: float
    orientation: str
    rate_exponent: float
    params: dict = field(default_factory=dict)

    @property
    def coefficient(self) -> float:
        return self.sigma / math.factorial(self.degree)

    @property
    def scale_power(self) -> float:
        return self.degree / self.gamma

    def rate(self, t):
        """``lambda_t = coefficient * t^gamma`` (zero for ``t <= 0``)."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, None)
        return self.coefficient * t ** self.gamma

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = -np.expm1(-self.rate(t))
        out = np.where(t > 0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def quantile(self, u):
        """Inverse CDF on ``[0, 1)``."""
        u = np.asarray(u, dtype=float)
        out = (-np.log1p(-u) / self.coefficient) ** (1.0 / self.gamma)
        return float(out) if out.ndim == 0 else out

    def transform(self, value, n: int):
        """Rescale a raw extreme: ``n^scale_power * (extreme - H_n)`` (or ``H_n - extreme``)."""
        value = np.asarray(value, dtype=float)
        gap = self.extreme - value if self.orientation == "max" else value - self.extreme
        out = float(n) ** self.scale_power * gap
        return float(out) if out.ndim == 0 else out

    def threshold(self, t, n: int):
        """``z_n(t)``, the inverse of :meth:`transform`."""
        t = np.asarray(t, dtype=float)
        step = t * float(n) ** (-self.scale_power)
        out = self.extreme - step if self.orientation == "max" else self.extreme + step
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "law_id": self.law_id,
            "params": dict(self.params),
            "gamma": self.gamma,
            "coefficient": self.coefficient,
            "sigma": self.sigma,
            "rate_exponent": self.rate_exponent,
            "extreme": self.extreme,
            "scale_power": self.scale_power,
        }


def cdf(law: LimitLaw, t):
    """Limit CDF; ``0`` for ``t <= 0``."""
    return law.cdf(t)


def _check_tail(d, alpha, a):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    if not alpha >= 0:
        raise DomainError(f"alpha must be >= 0, got {alpha!r}")
    if not a > 0 or math.isinf(a):
        raise DomainError(f"a must be in (0, inf), got {a!r}")


def _radial_log_factor(d, alpha, a):
    # log of a^2 Gamma(alpha+1)^2 / Gamma((d+1)/2 + 2 alpha)
    return 2.0 * math.log(a) + 2.0 * ln_gamma(alpha + 1.0) - ln_gamma(0.5 * (d + 1) + 2.0 * alpha)


def _ball_rate(d, alpha):
    return (d - 1.0) / (d - 1.0 + 4.0 * alpha)


def diameter_law(d: int, alpha: float, a: float, overlap: float) -> LimitLaw:
    """Largest interpoint distance; ``overlap`` is ``int f(x) f(-x) dx``."""
    _check_tail(d, alpha, a)
    if not overlap > 0 or math.isinf(overlap):
        raise DomainError("diameter law needs an antipodal overlap in (0, inf); "
                          f"got {overlap!r} (degenerate or hemisphere-supported direction law)")
    gamma = 0.5 * (d - 1) + 2.0 * alpha
    log_sigma = 0.5 * (d - 1) * math.log(4.0 * math.pi) + _radial_log_factor(d, alpha, a) + math.log(overlap)
    return LimitLaw("diameter", gamma, math.exp(log_sigma), 2, 2.0, "max", _ball_rate(d, alpha),
                    {"d": d, "alpha": alpha, "a": a, "overlap": overlap})


def scalar_law(d: int, alpha: float, a: float, overlap_self: float) -> LimitLaw:
    """Largest scalar product; ``overlap_self`` is ``int f(x)^2 dx``."""
    _check_tail(d, alpha, a)
    if not overlap_self > 0 or math.isinf(overlap_self):
        raise DomainError(f"scalar law needs a square-integrable density, got overlap {overlap_self!r}")
    gamma = 0.5 * (d - 1) + 2.0 * alpha
    log_sigma = 0.5 * (d - 1) * math.log(2.0 * math.pi) + _radial_log_factor(d, alpha, a) + math.log(overlap_self)
    return LimitLaw("scalar", gamma, math.exp(log_sigma), 2, 1.0, "max", _ball_rate(d, alpha),
                    {"d": d, "alpha": alpha, "a": a, "overlap_self": overlap_self})


def min_angle_law(d: int, overlap_self: float) -> LimitLaw:
    """Smallest spherical distance between directions; rescaling ``n^{2/(d-1)} S_n``."""
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    if not overlap_self > 0 or math.isinf(overlap_self):
        raise DomainError(f"min-angle law needs a square-integrable density, got overlap {overlap_self!r}")
    log_sigma = 0.5 * (d - 1) * math.log(math.pi) - ln_gamma(0.5 * (d + 1)) + math.log(overlap_self)
    return LimitLaw("min_angle", float(d - 1), math.exp(log_sigma), 2, 0.0, "min", 0.5,
                    {"d": d, "overlap_self": overlap_self})


def perimeter_law() -> LimitLaw:
    """Largest triangle perimeter of uniform points on the circle: ``1 - exp(-2t/(9 pi))``."""
    return LimitLaw("perimeter", 1.0, PERIMETER_SLOPE, 3, 3.0 * math.sqrt(3.0), "max", 0.5, {})


def tail_slope(law_id: str, **params) -> tuple:
    """``(gamma, sigma)`` with ``P(kernel within s of its extreme) ~ sigma s^gamma``.

    ``diameter`` takes ``d, alpha, a, overlap``; ``scalar`` takes
    ``d, alpha, a, overlap_self``; ``min_angle`` takes ``d, overlap_self``;
    ``perimeter`` takes nothing.
    """
    builders = {
        "diameter": diameter_law,
        "scalar": scalar_law,
        "min_angle": min_angle_law,
        "perimeter": perimeter_law,
    }
    if law_id not in builders:
        raise ValueError(f"unknown law {law_id!r}")
    law = builders[law_id](**params)
    return law.gamma, law.sigma


def sphere_diameter_coefficient(d: int) -> float:
    """Closed-form ``2^{d-3} Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2))``: the unit-sphere, uniform-direction diameter rate."""
    return math.exp((d - 3) * math.log(2.0) + ln_gamma(0.5 * d) - 0.5 * math.log(math.pi)
                    - ln_gamma(0.5 * (d + 1)))
