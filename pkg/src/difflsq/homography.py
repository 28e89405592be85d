"""Projective transforms of weighted point sets.

Only coordinates are mapped; weights pass through untouched. The matrix is
treated as fixed configuration, so the reverse pass only returns gradients
with respect to the input coordinates.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, NearInfinityPoint
from .linfit import WeightedPointSet

DENOMINATOR_EPS = 1e-12


@dataclass(frozen=True)
class Homography:
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        if h.size != 9:
            raise InvalidConfig(f"a homography needs 9 entries, got {h.size}")
        h = h.reshape(3, 3)
        if not np.all(np.isfinite(h)):
            raise InvalidConfig("homography entries must be finite")
        if abs(np.linalg.det(h)) <= 1e-12:
            raise InvalidConfig("homography is not invertible")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    def inverse(self):
        return Homography(np.linalg.inv(self.h))

    def __matmul__(self, other):
        """``(self @ other)`` applies ``other`` first."""
        return Homography(self.h @ other.h)

    def to_list(self):
        return [float(v) for v in self.h.ravel()]


def _project(H, xs, ys):
    h = H.h
    num_x = h[0, 0] * xs + h[0, 1] * ys + h[0, 2]
    num_y = h[1, 0] * xs + h[1, 1] * ys + h[1, 2]
    den = h[2, 0] * xs + h[2, 1] * ys + h[2, 2]
    small = np.abs(den) < DENOMINATOR_EPS
    if np.any(small):
        i = int(np.flatnonzero(small)[0])
        raise NearInfinityPoint(i, den[i])
    return num_x / den, num_y / den, den


def transform_xy(H, xs, ys):
    """Map raw coordinate arrays; returns ``(u, v)``."""
    u, v, _ = _project(H, np.asarray(xs, dtype=np.float64), np.asarray(ys, dtype=np.float64))
    return u, v


def transform_points(H, points):
    """Map every ``(x, y)`` through ``H``; weights are carried over unchanged."""
    u, v, _ = _project(H, points.xs, points.ys)
    return WeightedPointSet(u, v, points.ws)


def backward_transform(H, points, g_u, g_v):
    """Pull gradients w.r.t. transformed coordinates back to the inputs.

    Returns ``(g_x, g_y)``.
    """
    u, v, den = _project(H, points.xs, points.ys)
    g_u = np.asarray(g_u, dtype=np.float64)
    g_v = np.asarray(g_v, dtype=np.float64)
    h = H.h
    # quotient rule: du/dx = (h00 - u h20) / d, etc.
    a = g_u / den
    b = g_v / den
    g_x = a * (h[0, 0] - u * h[2, 0]) + b * (h[1, 0] - v * h[2, 0])
    g_y = a * (h[0, 1] - u * h[2, 1]) + b * (h[1, 1] - v * h[2, 1])
    return g_x, g_y
