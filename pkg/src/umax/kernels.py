"""Symmetric kernels and their extremes over all k-subsets of a sample.

The extreme ``H_n = max_J h(xi_J)`` (or the minimum, for kernels oriented
``"min"``) is computed by brute force over all ``C(n, k)`` index subsets in
lexicographic order. Subsets are processed in fixed-size chunks, so results
do not depend on how many workers evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .specfun import DomainError

__all__ = [
    "Kernel",
    "InsufficientSampleError",
    "distance_kernel",
    "scalar_kernel",
    "angle_kernel",
    "perimeter_kernel",
    "get_kernel",
    "KERNELS",
    "subset_indices",
    "u_max",
    "u_max_batch",
    "exceedance_count",
]

UNIT_TOL = 1e-9
# subsets evaluated per vectorized call (per sample in a batch)
CHUNK_ELEMENTS = 1 << 20


class InsufficientSampleError(ValueError):
    """Fewer sample points than the kernel degree."""


def _sqdist(x, y):
    diff = x - y
    acc = diff[..., 0] * diff[..., 0]
    for j in range(1, diff.shape[-1]):
        acc = acc + diff[..., j] * diff[..., j]
    return acc


def _dot(x, y):
    acc = x[..., 0] * y[..., 0]
    for j in range(1, max(x.shape[-1], y.shape[-1])):
        acc = acc + x[..., j] * y[..., j]
    return acc


def _distance(x, y):
    return np.sqrt(_sqdist(x, y))


def _angle(x, y):
    # inputs are unit vectors (checked within UNIT_TOL); clamp rounding overshoot
    return np.arccos(np.clip(_dot(x, y), -1.0, 1.0))


def _perimeter(x, y, z):
    a = _distance(x, y)
    b = _distance(x, z)
    c = _distance(y, z)
    # sum in sorted order so the value is exactly symmetric
    lo = np.minimum(np.minimum(a, b), c)
    hi = np.maximum(np.maximum(a, b), c)
    mid = np.maximum(np.minimum(a, b), np.minimum(np.maximum(a, b), c))
    return (lo + mid) + hi


def _check_unit(points):
    norms = np.sqrt(_dot(points, points))
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise DomainError(f"angle kernel requires unit vectors (norm tolerance {UNIT_TOL})")


@dataclass(frozen=True)
class Kernel:
    """Symmetric function of ``degree`` points.

    ``func`` is vectorized: it takes ``degree`` arrays of shape ``(..., d)``
    broadcasting against each other and returns the values over ``...``.
    ``check``, if set, validates a whole sample before evaluation.

    Kernels that are sums of a nonnegative pairwise term over the pairs of
    their arguments (the perimeter) may set ``pair_term``; the extreme is then
    evaluated from a per-sample table of pair terms, and entries that come
    within rounding distance of the extreme are re-evaluated with ``func`` so
    the result stays exactly symmetric.
    """

    name: str
    degree: int
    func: Callable
    orientation: str = "max"
    sup_value: Optional[float] = None
    check: Optional[Callable] = None
    pair_term: Optional[Callable] = None

    def __post_init__(self):
        if self.orientation not in ("max", "min"):
            raise ValueError(f"orientation must be 'max' or 'min', got {self.orientation!r}")
        if self.degree < 1:
            raise ValueError("kernel degree must be >= 1")

    def __call__(self, *points) -> float:
        if len(points) != self.degree:
            raise TypeError(f"{self.name} kernel takes {self.degree} points, got {len(points)}")
        pts = [np.asarray(p, dtype=float) for p in points]
        if self.check is not None:
            self.check(np.stack(pts))
        return float(self.func(*pts))

    def exceeds(self, values, z):
        """Indicator of an exceedance: ``h > z`` for max kernels, ``h < z`` for min kernels."""
        return values > z if self.orientation == "max" else values < z


def distance_kernel() -> Kernel:
    return Kernel("distance", 2, _distance, "max", 2.0)


def scalar_kernel() -> Kernel:
    return Kernel("scalar", 2, _dot, "max", 1.0)


def angle_kernel() -> Kernel:
    # the relevant extreme is the infimum 0
    return Kernel("angle", 2, _angle, "min", 0.0, _check_unit)


def perimeter_kernel() -> Kernel:
    return Kernel("perimeter", 3, _perimeter, "max", 3.0 * math.sqrt(3.0), pair_term=_distance)


KERNELS = {
    "distance": distance_kernel,
    "scalar": scalar_kernel,
    "angle": angle_kernel,
    "perimeter": perimeter_kernel,
}


def get_kernel(name: str) -> Kernel:
    try:
        return KERNELS[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; expected one of {sorted(KERNELS)}") from None


@lru_cache(maxsize=16)
def subset_indices(n: int, k: int) -> np.ndarray:
    """All k-subsets of ``range(n)`` in lexicographic order, shape ``(C(n, k), k)``."""
    if k == 1:
        out = np.arange(n, dtype=np.intp)[:, None]
    elif k == 2:
        i, j = np.triu_indices(n, 1)
        out = np.stack([i, j], axis=1).astype(np.intp)
    else:
        out = np.array(list(combinations(range(n), k)), dtype=np.intp).reshape(-1, k)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _pair_flat_indices(n: int, k: int) -> np.ndarray:
    # row p holds i_a * n + i_b for the p-th position pair (a, b) of each subset
    idx = subset_indices(n, k)
    out = np.stack([idx[:, a] * n + idx[:, b] for a, b in combinations(range(k), 2)])
    out.setflags(write=False)
    return out


def _prepare(points, kernel: Kernel) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2:
        pts = pts[None]
    if pts.ndim != 3:
        raise ValueError("points must have shape (n, d) or (batch, n, d)")
    if pts.shape[1] < kernel.degree:
        raise InsufficientSampleError(
            f"{kernel.name} kernel has degree {kernel.degree}; sample has {pts.shape[1]} points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("sample contains non-finite coordinates")
    if kernel.check is not None:
        kernel.check(pts)
    return pts


def _chunks(total: int, batch: int):
    step = max(1, CHUNK_ELEMENTS // max(batch, 1))
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


class _Evaluator:
    """Chunked evaluation of a kernel over all k-subsets of a batch of samples."""

    def __init__(self, pts: np.ndarray, kernel: Kernel):
        self.pts = pts
        self.kernel = kernel
        b, n, _ = pts.shape
        self.n = n
        self.idx = subset_indices(n, kernel.degree)
        self.table = None
        if kernel.pair_term is not None and kernel.degree >= 3:
            self.table = kernel.pair_term(pts[:, :, None, :], pts[:, None, :, :]).reshape(b, n * n)
            self.flat = _pair_flat_indices(n, kernel.degree)

    def fast(self, lo: int, hi: int) -> np.ndarray:
        idx = self.idx[lo:hi]
        if self.table is None:
            return self.kernel.func(*(self.pts[:, idx[:, j], :] for j in range(self.kernel.degree)))
        acc = None
        for flat in self.flat[:, lo:hi]:
            term = self.table[:, flat]
            acc = term if acc is None else acc + term
        return acc

    def exact(self, lo: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        idx = self.idx[lo + cols]
        return self.kernel.func(*(self.pts[rows, idx[:, j], :] for j in range(self.kernel.degree)))

    def slack(self, value):
        """Bound on |fast - exact|; zero when ``fast`` already is ``func``."""
        if self.table is None:
            return 0.0
        return 4.0 * len(self.flat) * np.finfo(float).eps * np.abs(value)


def _map_chunks(fn, chunks, workers):
    if workers is None or workers <= 1 or len(chunks) == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def u_max_batch(points, kernel: Kernel, workers: int = 1) -> np.ndarray:
    """Extreme kernel value of each sample in a batch ``(B, n, d)``; returns shape ``(B,)``."""
    pts = _prepare(points, kernel)
    ev = _Evaluator(pts, kernel)
    sign = 1.0 if kernel.orientation == "max" else -1.0

    def run(bounds):
        lo, hi = bounds
        vals = sign * ev.fast(lo, hi)
        top = vals.max(axis=1)
        if ev.table is None:
            return top
        # any subset whose exact value could beat the best one
        rows, cols = np.nonzero(vals >= (top - 2.0 * ev.slack(top))[:, None])
        best = np.full(pts.shape[0], -np.inf)
        np.maximum.at(best, rows, sign * ev.exact(lo, rows, cols))
        return best

    parts = _map_chunks(run, _chunks(len(ev.idx), pts.shape[0]), workers)
    return sign * np.max(np.stack(parts, axis=1), axis=1)


def u_max(sample, kernel: Kernel, workers: int = 1) -> float:
    """``max_J h(xi_J)`` over all k-subsets (minimum for ``"min"`` kernels)."""
    return float(u_max_batch(np.asarray(sample, dtype=float)[None], kernel, workers)[0])


def exceedance_count(sample, kernel: Kernel, z: float, workers: int = 1) -> int:
    """Number of k-subsets with ``h > z`` (``h < z`` for ``"min"`` kernels)."""
    pts = _prepare(np.asarray(sample, dtype=float)[None], kernel)
    ev = _Evaluator(pts, kernel)
    delta = ev.slack(z)

    def run(bounds):
        lo, hi = bounds
        vals = ev.fast(lo, hi)
        if ev.table is None:
            return int(np.count_nonzero(kernel.exceeds(vals, z)))
        near = np.abs(vals - z) <= delta
        sure = int(np.count_nonzero(kernel.exceeds(vals, z) & ~near))
        rows, cols = np.nonzero(near)
        return sure + int(np.count_nonzero(kernel.exceeds(ev.exact(lo, rows, cols), z)))

    return sum(_map_chunks(run, _chunks(len(ev.idx), 1), workers))
