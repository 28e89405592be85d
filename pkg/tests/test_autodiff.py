import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from difflsq import (DegenerateSystem, LengthMismatch, WeightedPointSet, backward_fit,
                     check_gradients, evaluate_curve, solve_weighted_ls)
from difflsq.verify import random_instance, sweep_gradients


def _instance(rng, m, n):
    return WeightedPointSet(rng.uniform(-1, 1, m), rng.normal(size=m), rng.uniform(0.1, 1, m))


def test_exact_fit_has_zero_weight_gradient(rng):
    xs = np.linspace(-1, 1, 8)
    pts = WeightedPointSet(xs, evaluate_curve([0.3, -1.0, 2.0], xs), rng.uniform(0.1, 1, 8))
    _, ctx = solve_weighted_ls(pts, 3)
    grads = backward_fit(ctx, rng.normal(size=3))
    np.testing.assert_allclose(grads.d_w, 0.0, atol=1e-12)


def test_zero_seed_gives_zero_gradients(rng):
    _, ctx = solve_weighted_ls(_instance(rng, 9, 3), 3)
    grads = backward_fit(ctx, np.zeros(3))
    for arr in (grads.d_w, grads.d_y, grads.d_x):
        np.testing.assert_array_equal(arr, 0.0)


def test_intercept_gradient_matches_fd(rng):
    rep = check_gradients(_instance(rng, 10, 3), 3, [1.0, 0.0, 0.0], step=1e-5)
    assert rep.passed(rtol=1e-5, atol=1e-9)


def test_line_instance_gradient_check(rng):
    rep = check_gradients(_instance(rng, 8, 2), 2, rng.normal(size=2), step=1e-5)
    assert rep.passed()
    assert rep.max_rel_error() <= 1e-5 or rep.max_abs_error() <= 1e-9


def test_duplicate_x_is_degenerate():
    pts = WeightedPointSet([0.5, 0.5], [1.0, 2.0], [1.0, 1.0])
    with pytest.raises(DegenerateSystem):
        check_gradients(pts, 2, [1.0, 0.0])


def test_exact_fit_weight_check_passes_under_floor():
    xs = np.linspace(0, 1, 6)
    pts = WeightedPointSet(xs, 1 + 2 * xs, np.full(6, 0.5))
    rep = check_gradients(pts, 2, [0.4, -0.7])
    assert np.max(rep.abs_errors("w")) <= 1e-9
    assert rep.passed()


def test_upstream_length_checked(rng):
    _, ctx = solve_weighted_ls(_instance(rng, 6, 2), 2)
    with pytest.raises(LengthMismatch):
        backward_fit(ctx, [1.0, 2.0, 3.0])


def test_gradient_sweep_small():
    res = sweep_gradients(count=40, seed=11)
    assert res.passed, res.line()


@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_linearity_in_seed(seed, a, b):
    rng = np.random.default_rng(seed)
    pts, n = random_instance(rng, 30, 4, 0.1, 1.0, cond_max=1e4)
    _, ctx = solve_weighted_ls(pts, n)
    g1, g2 = rng.normal(size=n), rng.normal(size=n)
    combo = backward_fit(ctx, a * g1 + b * g2)
    one, two = backward_fit(ctx, g1), backward_fit(ctx, g2)
    for name in ("d_w", "d_y", "d_x"):
        expected = a * getattr(one, name) + b * getattr(two, name)
        np.testing.assert_allclose(getattr(combo, name), expected, rtol=0, atol=1e-12 * max(
            1.0, np.max(np.abs(expected))))


@given(st.integers(0, 2**32 - 1))
def test_zero_weight_insensitivity(seed):
    rng = np.random.default_rng(seed)
    pts, n = random_instance(rng, 30, 3, 0.1, 1.0, cond_max=1e4, min_extra=2)
    ws = np.array(pts.ws)
    zeroed = rng.choice(len(ws), size=1, replace=False)
    ws[zeroed] = 0.0
    pts = pts.with_weights(ws)
    try:
        _, ctx = solve_weighted_ls(pts, n)
    except DegenerateSystem:
        return
    grads = backward_fit(ctx, rng.normal(size=n))
    for name in ("d_w", "d_y", "d_x"):
        assert np.all(getattr(grads, name)[zeroed] == 0.0)


@given(st.integers(0, 2**32 - 1))
def test_gradient_correctness_property(seed):
    rng = np.random.default_rng(seed)
    pts, n = random_instance(rng, 30, 4, 0.1, 1.0, cond_max=1e3, min_extra=1)
    rep = check_gradients(pts, n, rng.normal(size=n), step=1e-5)
    assert rep.passed(rtol=1e-5, atol=1e-9)
