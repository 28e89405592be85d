import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from difflsq import (Homography, InvalidConfig, NearInfinityPoint, WeightedPointSet,
                     backward_transform, transform_points)
from difflsq.verify import random_homography, sweep_homography


@pytest.fixture
def pts(rng):
    return WeightedPointSet(rng.uniform(0, 1, 12), rng.uniform(0, 1, 12), rng.uniform(0, 1, 12))


def test_identity_leaves_points(pts):
    out = transform_points(Homography.identity(), pts)
    np.testing.assert_array_equal(out.xs, pts.xs)
    np.testing.assert_array_equal(out.ys, pts.ys)
    np.testing.assert_array_equal(out.ws, pts.ws)


def test_scaling_doubles_coordinates(pts):
    out = transform_points(Homography(np.diag([2.0, 2.0, 1.0])), pts)
    np.testing.assert_allclose(out.xs, 2 * pts.xs, rtol=1e-15)
    np.testing.assert_allclose(out.ys, 2 * pts.ys, rtol=1e-15)
    np.testing.assert_array_equal(out.ws, pts.ws)


def test_backward_identity_passes_through(pts, rng):
    gu, gv = rng.normal(size=12), rng.normal(size=12)
    gx, gy = backward_transform(Homography.identity(), pts, gu, gv)
    np.testing.assert_array_equal(gx, gu)
    np.testing.assert_array_equal(gy, gv)


def test_backward_zero_seed(pts, rng):
    H = random_homography(rng)
    gx, gy = backward_transform(H, pts, np.zeros(12), np.zeros(12))
    np.testing.assert_array_equal(gx, 0.0)
    np.testing.assert_array_equal(gy, 0.0)


def test_point_at_infinity_raises():
    H = Homography([[1, 0, 0], [0, 1, 0], [1, 0, -1]])
    pts = WeightedPointSet([0.0, 1.0], [0.0, 0.5], [1.0, 1.0])
    with pytest.raises(NearInfinityPoint) as info:
        transform_points(H, pts)
    assert info.value.index == 1


@pytest.mark.parametrize("bad", [np.zeros((3, 3)), np.ones(8), [[1, 0, 0], [0, 1, 0], [0, 0, np.nan]]])
def test_invalid_matrices(bad):
    with pytest.raises(InvalidConfig):
        Homography(bad)


def test_to_list_round_trip(rng):
    H = random_homography(rng)
    assert Homography(H.to_list()).h.tolist() == H.h.tolist()


def test_homography_sweep_small():
    for res in sweep_homography(count=20, seed=5):
        assert res.passed, res.line()


@given(st.integers(0, 2**32 - 1))
def test_round_trip_and_composition(seed):
    rng = np.random.default_rng(seed)
    H1, H2 = random_homography(rng), random_homography(rng)
    pts = WeightedPointSet(rng.uniform(0, 1, 15), rng.uniform(0, 1, 15), rng.uniform(0, 1, 15))
    out = transform_points(H1, pts)
    back = transform_points(H1.inverse(), out)
    np.testing.assert_allclose(back.xs, pts.xs, atol=1e-9)
    np.testing.assert_allclose(back.ys, pts.ys, atol=1e-9)
    two = transform_points(H2, out)
    comp = transform_points(H2 @ H1, pts)
    np.testing.assert_allclose(two.xs, comp.xs, atol=1e-10)
    np.testing.assert_allclose(two.ys, comp.ys, atol=1e-10)
    assert two.ws is pts.ws or np.array_equal(two.ws, pts.ws)
