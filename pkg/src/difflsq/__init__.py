"""Differentiable weighted least-squares curve fitting.

The core is a weighted polynomial fit whose solution can be differentiated
with respect to the point weights and coordinates. Geometric area losses and
planar homographies sit around it; ``difflsq.toy`` and ``difflsq.lanesim``
build small experiments on top.
"""

from .autodiff import FitGradients, GradientCheck, backward_fit, check_gradients
from .errors import (DegenerateSystem, DiffLsqError, DivergedState, InvalidConfig, InvalidWeight,
                     LengthMismatch, NearInfinityPoint)
from .geoloss import (LossConfig, area_error, geometric_loss, geometric_loss_line,
                      geometric_loss_numeric, geometric_loss_parabola, l2_param_loss)
from .homography import Homography, backward_transform, transform_points, transform_xy
from .linfit import (CurveParams, FitContext, WeightedPointSet, evaluate_curve, solve_ls,
                     solve_weighted_ls, vandermonde)
from .toy import ToyConfig, Trajectory, run_toy, toy_step

__version__ = "0.1.0"
