"""Losses and error metrics between a predicted and a ground-truth curve.

All curve integrals run over ``[0, t]``. The line and parabola losses are
closed forms of the squared-area integral; ``geometric_loss_numeric`` is a
composite Simpson approximation of the same integral and serves as their
oracle.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, LengthMismatch
from .linfit import as_coeffs, evaluate_curve


@dataclass(frozen=True)
class LossConfig:
    t: float = 1.0
    quad_segments: int = 1000

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t > 0):
            raise InvalidConfig(f"t must be finite and > 0, got {self.t!r}")
        if self.quad_segments < 2 or self.quad_segments % 2:
            raise InvalidConfig(
                f"quad_segments must be even and >= 2, got {self.quad_segments!r}"
            )


def simpson(values, h):
    """Composite Simpson rule for equally spaced samples (odd sample count)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 3 or values.size % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number (>= 3) of samples")
    return h / 3.0 * (values[0] + values[-1]
                      + 4.0 * values[1:-1:2].sum()
                      + 2.0 * values[2:-1:2].sum())


def _delta(pred, gt, n=None):
    p, q = as_coeffs(pred), as_coeffs(gt)
    if p.size != q.size:
        raise LengthMismatch(f"curves have {p.size} and {q.size} coefficients")
    if n is not None and p.size != n:
        raise LengthMismatch(f"expected {n} coefficients, got {p.size}")
    return p - q


def l2_param_loss(pred, gt):
    """Mean squared coefficient error and its gradient with respect to ``pred``."""
    d = _delta(pred, gt)
    n = d.size
    return float(d @ d) / n, (2.0 / n) * d


def geometric_loss_line(pred, gt, cfg=LossConfig()):
    """Closed-form squared area between two straight lines over ``[0, t]``."""
    d0, d1 = _delta(pred, gt, 2)
    t = cfg.t
    loss = d0 * d0 * t + d1 * d0 * t**2 + d1 * d1 * t**3 / 3.0
    grad = np.array([
        2.0 * d0 * t + d1 * t**2,
        d0 * t**2 + 2.0 * d1 * t**3 / 3.0,
    ])
    return float(loss), grad


def geometric_loss_parabola(pred, gt, cfg=LossConfig()):
    """Closed-form squared area between two parabolas over ``[0, t]``."""
    d0, d1, d2 = _delta(pred, gt, 3)
    t = cfg.t
    loss = (d2 * d2 * t**5 / 5.0
            + 2.0 * d2 * d1 * t**4 / 4.0
            + (d1 * d1 + 2.0 * d2 * d0) * t**3 / 3.0
            + 2.0 * d1 * d0 * t**2 / 2.0
            + d0 * d0 * t)
    grad = np.array([
        2.0 * d2 * t**3 / 3.0 + d1 * t**2 + 2.0 * d0 * t,
        d2 * t**4 / 2.0 + 2.0 * d1 * t**3 / 3.0 + d0 * t**2,
        2.0 * d2 * t**5 / 5.0 + d1 * t**4 / 2.0 + 2.0 * d0 * t**3 / 3.0,
    ])
    return float(loss), grad


def geometric_loss(pred, gt, cfg=LossConfig()):
    """Dispatch to the closed form for lines and parabolas."""
    n = as_coeffs(pred).size
    if n == 2:
        return geometric_loss_line(pred, gt, cfg)
    if n == 3:
        return geometric_loss_parabola(pred, gt, cfg)
    raise LengthMismatch(f"no closed-form geometric loss for {n} coefficients")


def _delta_samples(pred, gt, cfg):
    d = _delta(pred, gt)
    xs = np.linspace(0.0, cfg.t, cfg.quad_segments + 1)
    return evaluate_curve(d, xs), cfg.t / cfg.quad_segments


def geometric_loss_numeric(pred, gt, cfg=LossConfig()):
    """Simpson approximation of the squared-area integral, any degree."""
    diff, h = _delta_samples(pred, gt, cfg)
    return float(simpson(diff * diff, h))


def area_error(pred, gt, cfg=LossConfig()):
    """Mean absolute lateral deviation: ``(1/t) * integral |y - y_hat|`` over ``[0, t]``."""
    diff, h = _delta_samples(pred, gt, cfg)
    return float(simpson(np.abs(diff), h)) / cfg.t
