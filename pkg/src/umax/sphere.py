"""Point laws on the unit ball.

A point is ``xi = r * U`` with a direction ``U`` on the sphere ``S^{d-1}``
and an independent radius ``r``. Directions are uniform or von Mises-Fisher;
radii are described by the law of ``1 - r`` near zero, ``F(s) ~ a s^alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import streams
from .specfun import DomainError, ln_gamma, log_bessel_i

__all__ = [
    "DirectionalLaw",
    "RadialLaw",
    "PointLaw",
    "log_vmf_normalizer",
    "vmf_normalizer",
    "uniform_density",
    "overlap_antipodal",
    "overlap_self",
    "sample_direction",
    "sample_radius",
    "sample_points",
    "PointStream",
    "sample_point",
]

UNIT_TOL = 1e-12


def _log_sphere_area(d: int) -> float:
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - ln_gamma(0.5 * d)


def uniform_density(d: int) -> float:
    """Density of the uniform law on ``S^{d-1}``: ``Gamma(d/2) / (2 pi^{d/2})``."""
    return math.exp(-_log_sphere_area(d))


@dataclass(frozen=True)
class DirectionalLaw:
    """Uniform (``kappa == 0``) or von Mises-Fisher direction law on ``S^{d-1}``."""

    d: int
    mu: Optional[tuple] = None
    kappa: float = 0.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        if self.mu is None:
            if self.kappa != 0.0:
                raise DomainError("a concentration requires a mean direction")
            return
        mu = tuple(float(m) for m in self.mu)
        if len(mu) != self.d:
            raise DomainError(f"mean direction has length {len(mu)}, expected {self.d}")
        if abs(math.sqrt(math.fsum(m * m for m in mu)) - 1.0) > UNIT_TOL:
            raise DomainError("mean direction must be a unit vector")
        if not self.kappa > 0 or math.isinf(self.kappa):
            raise DomainError(f"concentration must be a finite kappa > 0, got {self.kappa!r}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def uniform(cls, d: int) -> "DirectionalLaw":
        return cls(d)

    @classmethod
    def vmf(cls, mu, kappa: float) -> "DirectionalLaw":
        mu = np.asarray(mu, dtype=float)
        return cls(len(mu), tuple(mu / np.linalg.norm(mu)), float(kappa))

    @property
    def is_uniform(self) -> bool:
        return self.mu is None

    def density(self, x) -> np.ndarray:
        """Density w.r.t. surface measure at unit vectors ``x`` (shape ``(..., d)``)."""
        x = np.asarray(x, dtype=float)
        if self.is_uniform:
            return np.full(x.shape[:-1], uniform_density(self.d))
        logc = log_vmf_normalizer(self.d, self.kappa)
        return np.exp(logc + self.kappa * (x @ np.asarray(self.mu)))

    def to_dict(self) -> dict:
        if self.is_uniform:
            return {"kind": "uniform", "d": self.d}
        return {"kind": "vmf", "d": self.d, "mu": list(self.mu), "kappa": self.kappa}


def log_vmf_normalizer(d: int, kappa: float) -> float:
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    nu = 0.5 * d - 1.0
    return nu * math.log(kappa) - 0.5 * d * math.log(2.0 * math.pi) - log_bessel_i(nu, kappa)


def vmf_normalizer(d: int, kappa: float) -> float:
    """``C_d(kappa) = kappa^{d/2-1} / ((2 pi)^{d/2} I_{d/2-1}(kappa))``."""
    return math.exp(log_vmf_normalizer(d, kappa))


def overlap_antipodal(law: DirectionalLaw) -> float:
    """``int f(x) f(-x) dx`` over the sphere.

    May underflow to 0.0 for very concentrated vMF laws; consumers that need
    a positive value must check.
    """
    if law.is_uniform:
        return uniform_density(law.d)
    return math.exp(2.0 * log_vmf_normalizer(law.d, law.kappa) + _log_sphere_area(law.d))


def overlap_self(law: DirectionalLaw) -> float:
    """``int f(x)^2 dx`` over the sphere."""
    if law.is_uniform:
        return uniform_density(law.d)
    return math.exp(2.0 * log_vmf_normalizer(law.d, law.kappa)
                    - log_vmf_normalizer(law.d, 2.0 * law.kappa))


@dataclass(frozen=True)
class RadialLaw:
    """Law of the norm ``r``, described through ``F``, the CDF of ``1 - r``.

    kinds:
      * ``unit``: ``r == 1``.
      * ``ball``: uniform in the ``d``-ball, ``F(s) = 1 - (1-s)^d``.
      * ``power``: ``F(s) = min(a s^alpha, 1)``; leftover mass sits at ``s = 1``.
      * ``atom``: atom of mass ``a`` at ``s = 0``, the rest uniform on ``(0, 1]``.
        The filler is arbitrary; only the atom matters for the limit laws.
    """

    kind: str
    alpha: float = 0.0
    a: float = 1.0
    d: Optional[int] = None

    def __post_init__(self):
        if self.kind == "unit":
            ok = self.alpha == 0 and self.a == 1
        elif self.kind == "ball":
            ok = self.d is not None and self.d >= 2 and self.alpha == 1 and self.a == self.d
        elif self.kind == "power":
            ok = self.alpha > 0 and self.a > 0 and math.isfinite(self.alpha * self.a)
        elif self.kind == "atom":
            ok = self.alpha == 0 and 0 < self.a <= 1
        else:
            raise DomainError(f"unknown radial law {self.kind!r}")
        if not ok:
            raise DomainError(f"invalid parameters for radial law {self.kind!r}: "
                              f"alpha={self.alpha!r}, a={self.a!r}, d={self.d!r}")

    @classmethod
    def unit_norm(cls) -> "RadialLaw":
        return cls("unit")

    @classmethod
    def ball_uniform(cls, d: int) -> "RadialLaw":
        return cls("ball", 1.0, float(d), int(d))

    @classmethod
    def power_tail(cls, alpha: float, a: float) -> "RadialLaw":
        return cls("power", float(alpha), float(a))

    @classmethod
    def atom_mix(cls, a: float) -> "RadialLaw":
        return cls("atom", 0.0, float(a))

    def cdf(self, s):
        """``F(s) = P(1 - r <= s)``."""
        s = np.asarray(s, dtype=float)
        if self.kind == "unit":
            out = np.where(s >= 0, 1.0, 0.0)
        elif self.kind == "ball":
            out = 1.0 - (1.0 - np.clip(s, 0.0, 1.0)) ** self.d
        elif self.kind == "power":
            out = np.minimum(self.a * np.clip(s, 0.0, None) ** self.alpha, 1.0)
            out = np.where(s >= 1.0, 1.0, out)
        else:
            out = np.where(s >= 0, self.a + (1.0 - self.a) * np.clip(s, 0.0, 1.0), 0.0)
        return np.where(s < 0, 0.0, out)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "alpha": self.alpha, "a": self.a}
        if self.d is not None:
            out["d"] = self.d
        return out


@dataclass(frozen=True)
class PointLaw:
    directional: DirectionalLaw
    radial: RadialLaw

    def __post_init__(self):
        if self.radial.d is not None and self.radial.d != self.directional.d:
            raise DomainError("radial and directional dimensions differ")

    @property
    def d(self) -> int:
        return self.directional.d

    def to_dict(self) -> dict:
        return {"directional": self.directional.to_dict(), "radial": self.radial.to_dict()}


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _vmf_cosines(d: int, kappa: float, rng: np.random.Generator, size: int) -> np.ndarray:
    # Wood (1994) rejection sampler for W = <U, mu>
    dm1 = d - 1.0
    b = dm1 / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + dm1 * dm1))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm1 * math.log1p(-x0 * x0)
    out = np.empty(size)
    filled = 0
    while filled < size:
        m = size - filled
        z = rng.beta(0.5 * dm1, 0.5 * dm1, m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(m)
        ok = kappa * w + dm1 * np.log1p(-x0 * w) - c >= np.log(u)
        acc = w[ok]
        out[filled:filled + acc.size] = acc
        filled += acc.size
    return out


def sample_direction(law: DirectionalLaw, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Unit vectors from ``law``; shape ``(d,)`` if ``size`` is None else ``(size, d)``."""
    m = 1 if size is None else int(size)
    if law.is_uniform:
        u = _normalize(rng.standard_normal((m, law.d)))
    else:
        mu = np.asarray(law.mu)
        w = _vmf_cosines(law.d, law.kappa, rng, m)
        v = rng.standard_normal((m, law.d))
        v -= np.outer(v @ mu, mu)
        v = _normalize(v)
        u = _normalize(w[:, None] * mu + np.sqrt(np.clip(1.0 - w * w, 0.0, None))[:, None] * v)
    return u[0] if size is None else u


def sample_radius(law: RadialLaw, rng: np.random.Generator, size: Optional[int] = None):
    """Norms ``r`` in ``[0, 1]`` such that ``1 - r`` has CDF ``law.cdf``."""
    m = 1 if size is None else int(size)
    if law.kind == "unit":
        r = np.ones(m)
    elif law.kind == "ball":
        r = rng.random(m) ** (1.0 / law.d)
    elif law.kind == "power":
        s_max = min(1.0, law.a ** (-1.0 / law.alpha))
        s = np.minimum((rng.random(m) / law.a) ** (1.0 / law.alpha), s_max)
        r = 1.0 - s
    else:
        u = rng.random(m)
        # atom at s = 0 with mass a; otherwise s uniform on (0, 1]
        s = np.where(u < law.a, 0.0, 1.0 - rng.random(m))
        r = 1.0 - s
    return float(r[0]) if size is None else r


class PointStream:
    """Successive draws of i.i.d. points from one stream.

    Directions come from sub-stream 0 of ``seq`` and radii from sub-stream 1,
    so the two are independent and reproducible.
    """

    def __init__(self, law: PointLaw, seq: np.random.SeedSequence):
        self.law = law
        self._directions = streams.generator(streams.child(seq, 0))
        self._radii = streams.generator(streams.child(seq, 1))

    def draw(self, n: int) -> np.ndarray:
        u = sample_direction(self.law.directional, self._directions, n)
        if self.law.radial.kind == "unit":
            return u
        return sample_radius(self.law.radial, self._radii, n)[:, None] * u


def sample_points(law: PointLaw, n: int, seq: np.random.SeedSequence) -> np.ndarray:
    """``n`` i.i.d. points, shape ``(n, d)``."""
    return PointStream(law, seq).draw(n)


def sample_point(law: PointLaw, seq: np.random.SeedSequence) -> np.ndarray:
    return sample_points(law, 1, seq)[0]
