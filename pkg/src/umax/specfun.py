"""Special functions used by the limit constants.

Gamma and Beta go through ``math.lgamma``; the modified Bessel function of
the first kind is summed from its power series in log-scaled form so that
``log_bessel_i`` stays finite far beyond the overflow point of ``I_nu``.
"""

from __future__ import annotations

import math

__all__ = [
    "DomainError",
    "ln_gamma",
    "beta",
    "log_beta",
    "bessel_i",
    "log_bessel_i",
    "log_binomial",
]


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0 or math.isinf(x):
        raise DomainError(f"ln_gamma requires a finite x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"beta requires a, b > 0, got ({a!r}, {b!r})")
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def beta(a: float, b: float) -> float:
    """Complete Beta function ``Gamma(a) Gamma(b) / Gamma(a + b)``."""
    # sorted arguments make beta(a, b) == beta(b, a) bit for bit
    lo, hi = sorted((float(a), float(b)))
    return math.exp(log_beta(lo, hi))


def log_bessel_i(nu: float, x: float) -> float:
    """Log of the modified Bessel function ``I_nu(x)``.

    Sums ``sum_m (x/2)^(2m+nu) / (m! Gamma(m+nu+1))``. All terms are
    positive, so there is no cancellation; the running sum is kept relative
    to the first term and rescaled whenever it grows large.
    Returns ``-inf`` for ``x == 0`` and ``nu > 0``.
    """
    if nu < 0 or x < 0 or math.isnan(nu) or math.isnan(x):
        raise DomainError(f"bessel_i requires nu >= 0 and x >= 0, got ({nu!r}, {x!r})")
    if math.isinf(x):
        return math.inf
    if x == 0.0:
        return 0.0 if nu == 0 else -math.inf

    half_sq = 0.25 * x * x
    log_scale = nu * math.log(0.5 * x) - ln_gamma(nu + 1.0)
    total = 1.0
    term = 1.0
    m = 0
    while True:
        m += 1
        term *= half_sq / (m * (m + nu))
        total += term
        if total > 1e280:
            log_scale += math.log(total)
            term /= total
            total = 1.0
        # terms decrease once m exceeds x/2; stop when negligible
        if m > 0.5 * x and term < 1e-17 * total:
            break
    return log_scale + math.log(total)


def bessel_i(nu: float, x: float) -> float:
    """Modified Bessel function of the first kind ``I_nu(x)``."""
    return math.exp(log_bessel_i(nu, x))


def log_binomial(n: int, k: int) -> float:
    """``ln C(n, k)``: a sum of logs for small ``min(k, n-k)``, ``ln_gamma`` otherwise."""
    if k < 0 or n < 0:
        raise DomainError(f"log_binomial requires nonnegative arguments, got ({n}, {k})")
    if k > n:
        raise DomainError(f"log_binomial requires k <= n, got ({n}, {k})")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= 32:
        # lgamma differences lose ~eps * ln(n!) absolute; direct sum does not
        return math.fsum(math.log((n - i) / (i + 1)) for i in range(k))
    return ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
