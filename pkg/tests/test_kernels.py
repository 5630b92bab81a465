import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from umax import streams
from umax.kernels import (InsufficientSampleError, angle_kernel, distance_kernel, exceedance_count,
                          get_kernel, perimeter_kernel, scalar_kernel, subset_indices, u_max,
                          u_max_batch)
from umax.specfun import DomainError
from umax.sphere import DirectionalLaw, PointLaw, RadialLaw, sample_points

ALL = ["distance", "scalar", "angle", "perimeter"]


def circle(deg):
    t = np.radians(np.asarray(deg, dtype=float))
    return np.stack([np.cos(t), np.sin(t)], axis=1)


def brute(points, kernel):
    vals = [kernel(*(points[i] for i in J)) for J in itertools.combinations(range(len(points)), kernel.degree)]
    return max(vals) if kernel.orientation == "max" else min(vals), vals


def random_sample(name, n, seed, d=None):
    d = d or (2 if name == "perimeter" else 3)
    radial = RadialLaw.unit_norm() if name in ("angle", "perimeter") else RadialLaw.ball_uniform(d)
    return sample_points(PointLaw(DirectionalLaw.uniform(d), radial), n, streams.root(seed))


def rotation(d, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def test_degrees_and_orientation():
    assert [get_kernel(k).degree for k in ALL] == [2, 2, 2, 3]
    assert angle_kernel().orientation == "min"
    assert all(get_kernel(k).orientation == "max" for k in ("distance", "scalar", "perimeter"))
    assert perimeter_kernel().sup_value == pytest.approx(3 * math.sqrt(3))
    with pytest.raises(ValueError):
        get_kernel("area")


def test_kernel_examples():
    assert distance_kernel()([1, 0], [-1, 0]) == 2.0
    tri = circle([0, 120, 240])
    assert perimeter_kernel()(*tri) == pytest.approx(3 * math.sqrt(3), rel=1e-15)
    u = np.array([0.6, 0.8])
    assert scalar_kernel()(u, u) == pytest.approx(1.0, rel=1e-15)
    assert angle_kernel()(u, u) == 0.0


def test_angle_matches_arccos():
    pts = random_sample("angle", 60, 1)
    ker = angle_kernel()
    for i, j in itertools.combinations(range(60), 2):
        c = np.clip(pts[i] @ pts[j], -1, 1)
        assert abs(ker(pts[i], pts[j]) - math.acos(c)) < 1e-7
    assert ker([1, 0], [-1, 0]) == pytest.approx(math.pi)


def test_angle_rejects_non_unit():
    with pytest.raises(DomainError):
        angle_kernel()([1.0, 0.0], [0.5, 0.0])
    with pytest.raises(DomainError):
        u_max(np.array([[1.0, 0.0], [0.0, 1.0 + 1e-6]]), angle_kernel())
    # within tolerance is fine
    u_max(np.array([[1.0, 0.0], [0.0, 1.0 + 1e-11]]), angle_kernel())


def test_u_max_examples():
    assert u_max(np.array([[0.0, 0.0], [3.0, 4.0]]), distance_kernel()) == 5.0
    pts = circle([0, 90, 180, 200])
    assert u_max(pts, distance_kernel()) == pytest.approx(2.0, rel=1e-15)
    # pairs (0, 180) and (0, 200) both exceed 1.9: 2 sin(100 deg) = 1.9696
    assert exceedance_count(pts, distance_kernel(), 1.9) == 2
    assert exceedance_count(pts, distance_kernel(), 1.98) == 1


def test_exceedance_examples():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    assert exceedance_count(pts, distance_kernel(), 0.5) == 3
    pts = random_sample("distance", 30, 2)
    assert exceedance_count(pts, distance_kernel(), 2.0) == 0


def test_insufficient_sample():
    with pytest.raises(InsufficientSampleError):
        u_max(np.zeros((2, 2)), perimeter_kernel())
    with pytest.raises(InsufficientSampleError):
        exceedance_count(np.zeros((1, 2)), distance_kernel(), 0.0)


def test_subset_order_is_lexicographic():
    idx = subset_indices(6, 3)
    assert [tuple(r) for r in idx] == list(itertools.combinations(range(6), 3))
    assert not idx.flags.writeable


@pytest.mark.parametrize("name", ALL)
@pytest.mark.parametrize("n", [3, 7, 15])
def test_u_max_matches_brute_force(name, n):
    ker = get_kernel(name)
    pts = random_sample(name, n, 100 + n)
    best, vals = brute(pts, ker)
    assert u_max(pts, ker) == best
    for z in np.quantile(vals, [0.1, 0.5, 0.9]):
        expected = sum(1 for v in vals if (v > z if ker.orientation == "max" else v < z))
        assert exceedance_count(pts, ker, z) == expected


@pytest.mark.parametrize("name", ALL)
def test_parallel_equals_sequential(name, monkeypatch):
    import umax.kernels as km
    ker = get_kernel(name)
    # small chunks so several workers really split the work
    monkeypatch.setattr(km, "CHUNK_ELEMENTS", 64)
    pts = random_sample(name, 40 if name == "perimeter" else 120, 3)
    seq = u_max(pts, ker, workers=1)
    assert u_max(pts, ker, workers=4) == seq
    z = ker.sup_value - 0.05 if ker.orientation == "max" else 0.05
    assert exceedance_count(pts, ker, z, workers=4) == exceedance_count(pts, ker, z, workers=1)
    batch = np.stack([pts, pts[::-1]])
    out = u_max_batch(batch, ker, workers=3)
    assert out[0] == seq and out[1] == seq


@pytest.mark.parametrize("name", ALL)
def test_n5_parallel_bit_identical(name):
    ker = get_kernel(name)
    pts = random_sample(name, 5, 4)
    assert u_max(pts, ker, workers=2) == u_max(pts, ker, workers=1)


@settings(max_examples=250, deadline=None)
@given(st.sampled_from(ALL), st.integers(3, 9), st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_equivalence_u_max_and_count(name, n, seed, q):
    ker = get_kernel(name)
    pts = random_sample(name, n, seed)
    _, vals = brute(pts, ker)
    z = float(np.quantile(vals, q))
    h = u_max(pts, ker)
    count = exceedance_count(pts, ker, z)
    if ker.orientation == "max":
        assert (h <= z) == (count == 0)
    else:
        assert (h >= z) == (count == 0)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(ALL), st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_monotone_in_added_points(name, n, seed):
    ker = get_kernel(name)
    pts = random_sample(name, n + 1, seed)
    before, after = u_max(pts[:n], ker), u_max(pts, ker)
    if ker.orientation == "max":
        assert after >= before
    else:
        assert after <= before


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(ALL), st.integers(3, 25), st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_permutation_invariance(name, n, seed, q):
    ker = get_kernel(name)
    pts = random_sample(name, n, seed)
    perm = np.random.default_rng(seed).permutation(n)
    assert u_max(pts[perm], ker) == u_max(pts, ker)
    z = (ker.sup_value - q * 0.5) if ker.orientation == "max" else q
    assert exceedance_count(pts[perm], ker, z) == exceedance_count(pts, ker, z)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ALL), st.integers(0, 2**32 - 1), st.permutations(range(3)))
def test_kernel_symmetric_in_arguments(name, seed, order):
    ker = get_kernel(name)
    pts = random_sample(name, ker.degree, seed)
    perm = [i for i in order if i < ker.degree]
    assert ker(*pts[perm]) == ker(*pts)


@pytest.mark.parametrize("name", ["distance", "angle", "perimeter"])
def test_rotation_invariance(name):
    ker = get_kernel(name)
    for seed in range(10):
        pts = random_sample(name, 25, seed)
        rot = rotation(pts.shape[1], seed)
        assert u_max(pts @ rot.T, ker) == pytest.approx(u_max(pts, ker), abs=1e-9)


def test_exact_symmetry_near_equilateral_ties():
    # near-ties of the perimeter around 3 sqrt 3 resolve identically for any order
    base = circle([0, 120, 240, 0.0, 120.0 + 1e-9, 240 - 1e-9, 60, 180, 300])
    ker = perimeter_kernel()
    ref = u_max(base, ker)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert u_max(base[rng.permutation(len(base))], ker) == ref


@given(hnp.arrays(float, (6, 2), elements=st.floats(-5, 5)))
@settings(max_examples=100, deadline=None)
def test_distance_scalar_on_arbitrary_points(pts):
    for name in ("distance", "scalar"):
        ker = get_kernel(name)
        assert u_max(pts, ker) == brute(pts, ker)[0]


def test_rejects_non_finite():
    pts = np.array([[0.0, 0.0], [np.nan, 1.0]])
    with pytest.raises(ValueError):
        u_max(pts, distance_kernel())
