"""Reverse-mode gradients of the weighted least-squares solution.

The solution satisfies ``A beta = b`` with ``A = sum_i w_i^2 v_i v_i^T + lambda I``
and ``b = sum_i w_i^2 y_i v_i``. For a scalar loss with upstream gradient
``g = dL/dbeta`` the adjoint ``s = A^{-1} g`` gives every input gradient
in closed form; the damping ``lambda`` is held fixed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import DegenerateSystem, LengthMismatch
from .linfit import _solve, as_coeffs, solve_weighted_ls, vandermonde_derivative


@dataclass(frozen=True)
class FitGradients:
    d_w: np.ndarray
    d_y: np.ndarray
    d_x: np.ndarray


def backward_fit(ctx, g):
    """Vector-Jacobian product of the fit with respect to ``w``, ``y`` and ``x``.

    Parameters
    ----------
    ctx : FitContext
        Context returned by :func:`~difflsq.linfit.solve_weighted_ls`.
    g : array-like of length n
        Upstream gradient ``dL/dbeta``.
    """
    g = as_coeffs(g)
    if g.size != ctx.n:
        raise LengthMismatch(f"upstream gradient has length {g.size}, expected {ctx.n}")
    if not np.all(np.isfinite(g)):
        raise ValueError("upstream gradient must be finite")
    s = cho_solve(ctx.chol, g)
    if not np.all(np.isfinite(s)):
        raise DegenerateSystem("cached factor produced a non-finite adjoint")

    w, r = ctx.ws, ctx.residuals
    w2 = w * w
    sv = ctx.rows @ s
    drows = vandermonde_derivative(ctx.xs, ctx.n)
    sdv = drows @ s
    slope = drows @ ctx.beta          # derivative of the fitted curve at x_i
    return FitGradients(
        d_w=2.0 * w * sv * r,
        d_y=w2 * sv,
        d_x=w2 * (sdv * r - sv * slope),
    )


@dataclass(frozen=True)
class GradientCheck:
    """Per-entry comparison of analytic and central-difference gradients."""

    analytic: dict
    numeric: dict

    def abs_errors(self, name):
        return np.abs(self.analytic[name] - self.numeric[name])

    def rel_errors(self, name):
        return self.abs_errors(name) / np.maximum(1e-12, np.abs(self.numeric[name]))

    def max_rel_error(self):
        return max(float(self.rel_errors(k).max(initial=0.0)) for k in self.analytic)

    def max_abs_error(self):
        return max(float(self.abs_errors(k).max(initial=0.0)) for k in self.analytic)

    def passed(self, rtol=1e-5, atol=1e-9):
        """True when every entry is within ``max(atol, rtol * |numeric|)``."""
        for k in self.analytic:
            bound = np.maximum(atol, rtol * np.abs(self.numeric[k]))
            if np.any(self.abs_errors(k) > bound):
                return False
        return True


def check_gradients(points, n, g, step=1e-5):
    """Compare :func:`backward_fit` against central finite differences of ``g . beta``.

    Each scalar ``theta`` in ``w``, ``y`` and ``x`` is perturbed by
    ``h = step * max(1, |theta|)``. The damping chosen by the unperturbed
    solve is reused for every perturbed solve.
    """
    if not step > 0:
        raise ValueError("step must be positive")

    g = as_coeffs(g)
    _, ctx = solve_weighted_ls(points, n)
    grads = backward_fit(ctx, g)
    base = {"w": points.ws, "y": points.ys, "x": points.xs}

    def loss(arrays):
        _, c = _solve(arrays["x"], arrays["y"], arrays["w"], n, damping=ctx.damping)
        return float(g @ c.beta)

    numeric = {}
    for name, values in base.items():
        out = np.empty(values.size)
        for i, theta in enumerate(values):
            h = step * max(1.0, abs(theta))
            arrays = {k: np.array(v) for k, v in base.items()}
            arrays[name][i] = theta + h
            up = loss(arrays)
            arrays[name][i] = theta - h
            down = loss(arrays)
            out[i] = (up - down) / (2.0 * h)
        numeric[name] = out

    analytic = {"w": grads.d_w, "y": grads.d_y, "x": grads.d_x}
    return GradientCheck(analytic=analytic, numeric=numeric)
