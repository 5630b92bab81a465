"""Finite-n Poisson approximation for U-max-statistics.

For i.i.d. points and a symmetric kernel of degree ``k``,

    |P(H_n <= z) - exp(-lambda)| <= (1 - exp(-lambda)) *
        { p [C(n,k) - C(n-k,k)] + sum_{r=1}^{k-1} C(k,r) C(n-k,k-r) tau(r) }

with ``p = P(h(xi_1..xi_k) > z)``, ``lambda = C(n,k) p`` and ``tau(r)`` the
conditional probability that a second k-tuple sharing exactly ``r`` points
with the first also exceeds ``z``. This module estimates ``p`` and ``tau`` by
plain Monte Carlo and checks the inequality against simulated ``H_n``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .kernels import Kernel, u_max_batch
from .sphere import PointLaw, PointStream
from .specfun import log_binomial

__all__ = [
    "UndefinedRatioError",
    "TauEstimate",
    "BoundReport",
    "estimate_exceed_prob",
    "estimate_tau",
    "lambda_value",
    "poisson_bound",
    "verify_bound",
    "verify_bounds",
]

# k-tuples drawn per vectorized block
TUPLE_BLOCK = 1 << 18


class UndefinedRatioError(ArithmeticError):
    """No exceedance observed, so a conditional ratio cannot be estimated."""


@dataclass(frozen=True)
class TauEstimate:
    tau: float
    se: float
    p_hat: float
    p_se: float
    reps: int


def _shard_sizes(reps: int, shards: int) -> list:
    shards = max(1, min(int(shards), reps))
    base, extra = divmod(reps, shards)
    return [base + (1 if i < extra else 0) for i in range(shards)]


def _run_shards(fn, sizes, workers):
    jobs = list(enumerate(sizes))
    if workers is None or workers <= 1 or len(jobs) == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _overlap_counts(law: PointLaw, kernel: Kernel, z: float, reps: int, seq, rs: Sequence[int],
                    shards: int = 1, workers: int = 1):
    """Counts of first-tuple exceedances and joint exceedances for each overlap ``r``.

    Each rep draws ``2k - min(rs)`` points; the first tuple is points
    ``0..k-1`` and the tuple for overlap ``r`` is ``k-r..2k-r-1``, so the two
    share exactly ``r`` points.
    """
    k = kernel.degree
    width = 2 * k - min(rs) if rs else k

    def shard(index, size):
        ps = PointStream(law, streams.child(seq, index))
        first = 0
        joint = np.zeros(len(rs), dtype=np.int64)
        done = 0
        block = max(1, TUPLE_BLOCK // width)
        while done < size:
            m = min(block, size - done)
            pts = ps.draw(m * width).reshape(m, width, law.d)
            if kernel.check is not None:
                kernel.check(pts)
            hit = kernel.exceeds(kernel.func(*(pts[:, j] for j in range(k))), z)
            first += int(np.count_nonzero(hit))
            for q, r in enumerate(rs):
                if r == k:
                    joint[q] += int(np.count_nonzero(hit))
                    continue
                other = kernel.exceeds(kernel.func(*(pts[:, j] for j in range(k - r, 2 * k - r))), z)
                joint[q] += int(np.count_nonzero(hit & other))
            done += m
        return first, joint

    parts = _run_shards(shard, _shard_sizes(reps, shards), workers)
    first = sum(p[0] for p in parts)
    joint = np.sum([p[1] for p in parts], axis=0) if rs else np.zeros(0, dtype=np.int64)
    return first, joint


def _binomial_se(hits: int, trials: int) -> float:
    q = hits / trials
    return math.sqrt(q * (1.0 - q) / trials)


def estimate_exceed_prob(law: PointLaw, kernel: Kernel, z: float, reps: int,
                         seq: np.random.SeedSequence, shards: int = 1, workers: int = 1):
    """``(p_hat, se)``: fraction of fresh k-tuples whose kernel value exceeds ``z``."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    first, _ = _overlap_counts(law, kernel, z, reps, seq, (), shards, workers)
    return first / reps, _binomial_se(first, reps)


def estimate_tau(law: PointLaw, kernel: Kernel, r: int, z: float, reps: int,
                 seq: np.random.SeedSequence, shards: int = 1, workers: int = 1) -> TauEstimate:
    """Ratio estimate of ``tau(r)`` from ``reps`` draws of ``2k - r`` points.

    ``tau_hat = joint / first``; its delta-method standard error reduces to
    the binomial error over the ``first`` exceeding reps.
    """
    if not 1 <= r <= kernel.degree:
        raise ValueError(f"overlap r must be in 1..{kernel.degree}, got {r}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    first, joint = _overlap_counts(law, kernel, z, reps, seq, (r,), shards, workers)
    if first == 0:
        raise UndefinedRatioError(f"no exceedance of z={z!r} in {reps} reps; raise the budget or lower z")
    return TauEstimate(joint[0] / first, _binomial_se(int(joint[0]), first),
                       first / reps, _binomial_se(first, reps), reps)


def lambda_value(n: int, k: int, p: float) -> float:
    """``C(n, k) * p`` computed in log space."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be a probability, got {p!r}")
    if p == 0.0:
        return 0.0
    return math.exp(log_binomial(n, k) + math.log(p))


def _bound_terms(n, k, p, tau):
    # C(m, j) = 0 for m < j, which math.comb already returns
    head = float(math.comb(n, k) - math.comb(n - k, k))
    coefs = [float(math.comb(k, r) * math.comb(n - k, k - r)) for r in range(1, k)]
    return head, coefs


def poisson_bound(n: int, k: int, p: float, tau: Sequence[float]) -> float:
    """Right-hand side of the Poisson approximation inequality.

    ``tau`` holds ``tau(1), ..., tau(k-1)``; it is empty for ``k == 1``.
    Binomials with upper index below the lower one count as zero.
    """
    if len(tau) != k - 1:
        raise ValueError(f"expected {k - 1} tau values, got {len(tau)}")
    lam = lambda_value(n, k, p)
    head, coefs = _bound_terms(n, k, p, tau)
    inner = p * head + math.fsum(c * t for c, t in zip(coefs, tau))
    return -math.expm1(-lam) * inner


@dataclass
class BoundReport:
    n: int
    k: int
    z: float
    p_hat: float
    p_se: float
    tau_hat: list
    lam: float
    poisson_prob: float
    bound: float
    mc_reps: int
    outer_reps: int
    prob_hat: float
    prob_se: float
    combined_se: float
    discrepancy: float
    holds: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["tau_hat"] = [{"r": r, "estimate": e, "se": s} for r, (e, s) in enumerate(self.tau_hat, start=1)]
        return out


def _simulate_extremes(law, kernel, n, reps, seq, shards, workers):
    per_block = max(1, (1 << 20) // math.comb(n, kernel.degree))

    def shard(index, size):
        ps = PointStream(law, streams.child(seq, index))
        out = []
        done = 0
        while done < size:
            m = min(per_block, size - done)
            out.append(u_max_batch(ps.draw(m * n).reshape(m, n, law.d), kernel))
            done += m
        return np.concatenate(out) if out else np.empty(0)

    return np.concatenate(_run_shards(shard, _shard_sizes(reps, shards), workers))


def verify_bounds(law: PointLaw, kernel: Kernel, n: int, zs: Sequence[float], outer_reps: int,
                  inner_reps: int, seq: np.random.SeedSequence, shards: int = 1,
                  workers: int = 1) -> list:
    """Check the Poisson approximation bound on a grid of thresholds.

    ``P(H_n <= z)`` (``P(H_n >= z)`` for min kernels) is estimated from
    ``outer_reps`` simulated samples of size ``n`` shared by all ``z``; ``p``
    and ``tau(1..k-1)`` come from ``inner_reps`` tuple draws per ``z``.
    A threshold passes when the discrepancy is at most the bound plus three
    combined standard errors.
    """
    k = kernel.degree
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    if outer_reps < 1 or inner_reps < 1:
        raise ValueError("budgets must be >= 1")
    extremes = _simulate_extremes(law, kernel, n, outer_reps, streams.child(seq, 0), shards, workers)
    reports = []
    for zi, z in enumerate(zs):
        z = float(z)
        below = extremes <= z if kernel.orientation == "max" else extremes >= z
        prob = float(np.count_nonzero(below)) / outer_reps
        prob_se = _binomial_se(int(np.count_nonzero(below)), outer_reps)
        rs = tuple(range(1, k))
        first, joint = _overlap_counts(law, kernel, z, inner_reps, streams.child(seq, 1, zi), rs, shards, workers)
        p = first / inner_reps
        p_se = _binomial_se(first, inner_reps)
        notes = []
        if first:
            taus = [(joint[q] / first, _binomial_se(int(joint[q]), first)) for q in range(len(rs))]
        else:
            taus = [(0.0, 0.0)] * len(rs)
            notes.append("no exceedance in inner reps; tau set to 0 (bound factor is 0)")
        taus.append((1.0, 0.0))
        lam = lambda_value(n, k, p)
        poisson = math.exp(-lam)
        tau_vals = [t for t, _ in taus[:-1]]
        bound = poisson_bound(n, k, p, tau_vals)

        head, coefs = _bound_terms(n, k, p, tau_vals)
        inner = p * head + math.fsum(c * t for c, t in zip(coefs, tau_vals))
        n_k = math.comb(n, k)
        d_bound_dp = poisson * n_k * inner + (1.0 - poisson) * head
        se_bound_sq = (d_bound_dp * p_se) ** 2 + sum(((1.0 - poisson) * c * s) ** 2
                                                      for c, (_, s) in zip(coefs, taus))
        se_poisson = poisson * n_k * p_se
        combined = math.sqrt(prob_se ** 2 + se_poisson ** 2 + se_bound_sq)
        gap = abs(prob - poisson)
        reports.append(BoundReport(n, k, z, p, p_se, taus, lam, poisson, bound, inner_reps, outer_reps,
                                   prob, prob_se, combined, gap, gap <= bound + 3.0 * combined, notes))
    return reports


def verify_bound(law: PointLaw, kernel: Kernel, n: int, z: float, outer_reps: int, inner_reps: int,
                 seq: np.random.SeedSequence, shards: int = 1, workers: int = 1) -> BoundReport:
    return verify_bounds(law, kernel, n, [z], outer_reps, inner_reps, seq, shards, workers)[0]
