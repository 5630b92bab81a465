"""Monte Carlo experiments against the Weibull limit laws.

Trial ``i`` of an experiment draws its sample from the stream
``SeedSequence(master_seed, spawn_key=(i,))``; everything downstream is a
deterministic function of those samples, so a ``TrialSet`` depends only on
the configuration and never on the number of workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .kernels import get_kernel, u_max_batch
from .limits import LimitLaw
from .sphere import PointLaw, sample_points

__all__ = [
    "ResourceCapExceeded",
    "ExperimentConfig",
    "TrialSet",
    "EmpiricalCdf",
    "run_trials",
    "ks_statistic",
    "exact_min_spacing_survival",
    "convergence_study",
    "StudyResult",
    "KS_SD",
]

DEFAULT_MAX_EVALUATIONS = 5e9
# standard deviation of the Kolmogorov distribution; KS se is about KS_SD / sqrt(R)
KS_SD = 0.2603


class ResourceCapExceeded(RuntimeError):
    def __init__(self, evaluations: float, cap: float):
        self.evaluations = evaluations
        self.cap = cap
        super().__init__(f"experiment needs {evaluations:.4g} kernel evaluations; cap is {cap:.4g}")


@dataclass(frozen=True)
class ExperimentConfig:
    law: PointLaw
    kernel: str
    n: int
    trials: int
    limit: LimitLaw
    master_seed: int = 0
    shards: int = 1
    max_evaluations: float = DEFAULT_MAX_EVALUATIONS

    def __post_init__(self):
        degree = get_kernel(self.kernel).degree
        if self.n < degree:
            raise ValueError(f"n={self.n} is below the {self.kernel} kernel degree {degree}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.shards < 1:
            raise ValueError("shards must be >= 1")
        streams.root(self.master_seed)

    @property
    def evaluations(self) -> int:
        return self.trials * math.comb(self.n, get_kernel(self.kernel).degree)

    def to_dict(self) -> dict:
        return {
            "law": self.law.to_dict(),
            "kernel": self.kernel,
            "n": self.n,
            "trials": self.trials,
            "limit": self.limit.to_dict(),
            "seed": self.master_seed,
            "shards": self.shards,
            "max_evaluations": self.max_evaluations,
        }


@dataclass
class TrialSet:
    raw: np.ndarray
    rescaled: np.ndarray
    clamped: int
    config: ExperimentConfig

    def ecdf(self) -> "EmpiricalCdf":
        return EmpiricalCdf(self.rescaled)

    def write_csv(self, path) -> None:
        """``trial,raw,rescaled`` rows with shortest round-trip decimal doubles."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trial", "raw", "rescaled"])
            for i, (r, t) in enumerate(zip(self.raw.tolist(), self.rescaled.tolist())):
                writer.writerow([i, repr(r), repr(t)])


class EmpiricalCdf:
    """Right-continuous step function with jumps of ``1/R`` at the sample values."""

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float).ravel())
        if values.size == 0:
            raise ValueError("empirical CDF needs at least one value")
        self.values = values

    def __len__(self) -> int:
        return self.values.size

    def __call__(self, t):
        out = np.searchsorted(self.values, t, side="right") / self.values.size
        return float(out) if np.ndim(out) == 0 else out


def ks_statistic(ecdf, limit: LimitLaw) -> float:
    """``sup_t |F_hat(t) - F(t)|``, evaluated on both sides of every jump."""
    if not isinstance(ecdf, EmpiricalCdf):
        ecdf = EmpiricalCdf(ecdf)
    x = ecdf.values
    r = x.size
    f = np.asarray(limit.cdf(x), dtype=float)
    above = np.arange(1, r + 1) / r - f
    below = f - np.arange(0, r) / r
    return float(max(above.max(), below.max(), 0.0))


def exact_min_spacing_survival(n: int, s: float) -> float:
    """``P(S_n > s)`` for the minimal spacing of ``n`` uniform points on the circle."""
    if n < 2:
        raise ValueError("need n >= 2")
    if s < 0:
        return 1.0
    base = 1.0 - n * s / (2.0 * math.pi)
    return base ** (n - 1) if base > 0 else 0.0


def _block_size(n: int, degree: int) -> int:
    # trials per vectorized block; a function of (n, k) only
    return int(max(1, min(256, (1 << 20) // math.comb(n, degree))))


def _run_block(law: PointLaw, kernel_name: str, n: int, seed: int, lo: int, hi: int) -> np.ndarray:
    kernel = get_kernel(kernel_name)
    pts = np.stack([sample_points(law, n, streams.trial_stream(seed, i)) for i in range(lo, hi)])
    return u_max_batch(pts, kernel)


def run_trials(config: ExperimentConfig, workers: int = 1) -> TrialSet:
    """``config.trials`` independent extremes, rescaled by ``config.limit``."""
    if config.evaluations > config.max_evaluations:
        raise ResourceCapExceeded(config.evaluations, config.max_evaluations)
    kernel = get_kernel(config.kernel)
    step = _block_size(config.n, kernel.degree)
    blocks = [(lo, min(lo + step, config.trials)) for lo in range(0, config.trials, step)]
    args = (config.law, config.kernel, config.n, config.master_seed)
    if workers is None or workers <= 1 or len(blocks) == 1:
        parts = [_run_block(*args, lo, hi) for lo, hi in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, *args, lo, hi) for lo, hi in blocks]
            parts = [f.result() for f in futures]
    raw = np.concatenate(parts)
    rescaled = np.asarray(config.limit.transform(raw, config.n), dtype=float)
    negative = rescaled < 0
    clamped = int(np.count_nonzero(negative))
    rescaled = np.where(negative, 0.0, rescaled)
    return TrialSet(raw, rescaled, clamped, config)


@dataclass
class StudyResult:
    config: ExperimentConfig
    per_n: list = field(default_factory=list)
    slope: float = math.nan

    def to_dict(self) -> dict:
        return {"config": self.config.to_dict(), "law": self.config.limit.to_dict(),
                "per_n": list(self.per_n), "slope": self.slope}


def _seed_for(master_seed: int, n: int) -> int:
    return int(np.random.SeedSequence([master_seed, n]).generate_state(1, np.uint64)[0])


def convergence_study(config: ExperimentConfig, n_grid: Sequence[int], workers: int = 1) -> StudyResult:
    """KS distance to the limit law along ``n_grid`` and the fitted log-log slope."""
    grid = [int(n) for n in n_grid]
    if len(grid) < 3:
        raise ValueError("convergence study needs at least 3 sample sizes")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be strictly increasing")
    result = StudyResult(config)
    total = sum(config.trials * math.comb(n, get_kernel(config.kernel).degree) for n in grid)
    if total > config.max_evaluations:
        raise ResourceCapExceeded(total, config.max_evaluations)
    for n in grid:
        cfg = ExperimentConfig(config.law, config.kernel, n, config.trials, config.limit,
                               _seed_for(config.master_seed, n), config.shards, config.max_evaluations)
        ts = run_trials(cfg, workers)
        ks = ks_statistic(ts.ecdf(), config.limit)
        result.per_n.append({"n": n, "ks": ks, "se": KS_SD / math.sqrt(config.trials),
                             "trials": config.trials, "clamped": ts.clamped})
    ks = np.array([row["ks"] for row in result.per_n])
    if np.all(ks > 0):
        result.slope = float(np.polyfit(np.log(grid), np.log(ks), 1)[0])
    return result
