"""
Weighted polynomial least-squares fitting via the normal equations.

The weighted problem ``W X beta = W Y`` is solved through the normal
equations ``(X^T W^2 X) beta = X^T W^2 Y`` and a Cholesky factorization.
Weights are applied as the diagonal of ``W``, so they enter the normal
matrix squared. Everything the reverse pass needs is kept in a
:class:`FitContext`.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DegenerateSystem, InvalidWeight, LengthMismatch

# relative Tikhonov damping, scaled by max(1, trace(A) / n)
DEFAULT_REL_DAMPING = 1e-10
# damping is only switched on below this reciprocal condition number
DEFAULT_DAMPING_RCOND = 1e-10


@dataclass(frozen=True)
class WeightedPointSet:
    """Sequence of ``(x, y, w)`` triplets stored as three float64 arrays."""

    xs: np.ndarray
    ys: np.ndarray
    ws: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64).ravel()
        ys = np.array(self.ys, dtype=np.float64).ravel()
        ws = np.array(self.ws, dtype=np.float64).ravel()
        if not (xs.size == ys.size == ws.size):
            raise LengthMismatch(
                f"xs, ys, ws have lengths {xs.size}, {ys.size}, {ws.size}"
            )
        if xs.size < 1:
            raise LengthMismatch("a point set needs at least one point")
        for arr in (xs, ys, ws):
            arr.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "ws", ws)

    @classmethod
    def unweighted(cls, xs, ys):
        xs = np.asarray(xs, dtype=np.float64)
        return cls(xs, ys, np.ones_like(xs))

    def __len__(self):
        return self.xs.size

    def __eq__(self, other):
        if not isinstance(other, WeightedPointSet):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in
                   ((self.xs, other.xs), (self.ys, other.ys), (self.ws, other.ws)))

    def with_weights(self, ws):
        return WeightedPointSet(self.xs, self.ys, ws)

    def with_coords(self, xs, ys):
        return WeightedPointSet(xs, ys, self.ws)


@dataclass(frozen=True)
class CurveParams:
    """Polynomial coefficients, constant term first."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size < 1:
            raise LengthMismatch("a curve needs at least one coefficient")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self):
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, CurveParams):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __call__(self, x):
        return evaluate_curve(self, x)

    def __sub__(self, other):
        a, b = as_coeffs(self), as_coeffs(other)
        if a.size != b.size:
            raise LengthMismatch(f"cannot subtract curves of length {a.size} and {b.size}")
        return CurveParams(a - b)


def as_coeffs(params):
    """Return the coefficient array of a CurveParams or array-like."""
    if isinstance(params, CurveParams):
        return params.coeffs
    return np.asarray(params, dtype=np.float64).ravel()


@dataclass(frozen=True)
class FitContext:
    """Intermediates of a forward solve, consumed by ``backward_fit``."""

    n: int
    m: int
    chol: tuple = field(repr=False)   # (factor, lower) as returned by cho_factor
    beta: np.ndarray
    rows: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    damping: float
    xs: np.ndarray = field(repr=False)
    ws: np.ndarray = field(repr=False)

    @property
    def normal_matrix(self):
        """Reconstruct the (damped) normal matrix from its Cholesky factor."""
        c, lower = self.chol
        L = np.tril(c) if lower else np.triu(c).T
        return L @ L.T


def vandermonde_row(x, n):
    """Return ``[1, x, x**2, ..., x**(n-1)]``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.vander(np.atleast_1d(np.float64(x)), n, increasing=True)[0]


def vandermonde(xs, n):
    """Stack ``vandermonde_row`` for each x into an ``(m, n)`` matrix."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.vander(np.asarray(xs, dtype=np.float64), n, increasing=True)


def vandermonde_derivative(xs, n):
    """Row-wise derivative of the Vandermonde matrix: ``[0, 1, 2x, ..., (n-1)x**(n-2)]``."""
    xs = np.asarray(xs, dtype=np.float64)
    d = np.zeros((xs.size, n))
    if n > 1:
        d[:, 1:] = vandermonde(xs, n - 1) * np.arange(1, n)
    return d


def evaluate_curve(params, x):
    """Evaluate the polynomial at ``x`` (scalar or array) with Horner's rule."""
    c = as_coeffs(params)
    x = np.asarray(x, dtype=np.float64)
    out = np.full(x.shape, c[-1])
    for coef in c[-2::-1]:
        out = out * x + coef
    return out if out.ndim else float(out)


def _check_points(points):
    ws = points.ws
    if not np.all(np.isfinite(ws)):
        bad = int(np.flatnonzero(~np.isfinite(ws))[0])
        raise InvalidWeight(f"weight {bad} is not finite")
    if np.any(ws < 0):
        bad = int(np.flatnonzero(ws < 0)[0])
        raise InvalidWeight(f"weight {bad} is negative ({ws[bad]!r})")
    if not (np.all(np.isfinite(points.xs)) and np.all(np.isfinite(points.ys))):
        raise ValueError("point coordinates must be finite")


def _solve(xs, ys, ws, n, damping=None, rel_damping=DEFAULT_REL_DAMPING,
           damping_rcond=DEFAULT_DAMPING_RCOND):
    """Core solve without input validation.

    ``damping=None`` selects the damping automatically; a number forces it.
    """
    m = xs.size
    if m < n:
        raise DegenerateSystem(f"{m} points cannot determine {n} coefficients")
    rows = vandermonde(xs, n)
    w2 = ws * ws
    wrows = rows * w2[:, None]
    A = rows.T @ wrows
    b = wrows.T @ ys

    if damping is None:
        active = np.unique(xs[ws != 0])
        if active.size < n:
            raise DegenerateSystem(
                f"only {active.size} distinct x-values carry weight, need {n}"
            )
        eig = np.linalg.eigvalsh(A)
        if not eig[-1] > 0:
            raise DegenerateSystem("normal matrix is zero")
        if eig[0] / eig[-1] < damping_rcond:
            damping = rel_damping * max(1.0, np.trace(A) / n)
        else:
            damping = 0.0
    damping = float(damping)

    try:
        chol = cho_factor(A + damping * np.eye(n), lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise DegenerateSystem(f"Cholesky factorization failed: {exc}") from exc
    if not np.all(np.diag(chol[0]) > 0):
        raise DegenerateSystem("normal matrix is not positive definite")
    beta = cho_solve(chol, b)
    if not np.all(np.isfinite(beta)):
        raise DegenerateSystem("solution is not finite")

    beta.flags.writeable = False
    residuals = ys - evaluate_curve(beta, xs)
    ctx = FitContext(n=n, m=m, chol=chol, beta=beta, rows=rows,
                     residuals=residuals, damping=damping, xs=xs, ws=ws)
    return CurveParams(beta), ctx


def solve_weighted_ls(points, n, *, damping=None, rel_damping=DEFAULT_REL_DAMPING,
                      damping_rcond=DEFAULT_DAMPING_RCOND):
    """Fit a degree ``n-1`` polynomial in the weighted least-squares sense.

    Minimizes ``sum_i w_i**2 (v(x_i).beta - y_i)**2 + damping * |beta|**2``.

    Parameters
    ----------
    points : WeightedPointSet
        Input triplets. Weights must be finite and non-negative.
    n : int
        Number of coefficients.
    damping : float, optional
        Fixed Tikhonov damping. When omitted, damping of
        ``rel_damping * max(1, trace(A)/n)`` is applied only if the normal
        matrix has reciprocal condition number below ``damping_rcond``.

    Returns
    -------
    (CurveParams, FitContext)

    Raises
    ------
    InvalidWeight
        If any weight is negative or non-finite.
    DegenerateSystem
        If fewer than ``n`` distinct x-values carry weight, or the
        factorization fails.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_points(points)
    return _solve(points.xs, points.ys, points.ws, n, damping=damping,
                  rel_damping=rel_damping, damping_rcond=damping_rcond)


def solve_ls(points, n, **kwargs):
    """Ordinary least squares: :func:`solve_weighted_ls` with unit weights."""
    if isinstance(points, WeightedPointSet):
        points = WeightedPointSet.unweighted(points.xs, points.ys)
    else:
        xs, ys = points
        points = WeightedPointSet.unweighted(xs, ys)
    return solve_weighted_ls(points, n, **kwargs)
