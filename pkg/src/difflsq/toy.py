"""Gradient descent on a weighted point set so its best-fit line hits a target.

Three modes choose which inputs of the fit are updated: the coordinates,
the weights, or both. Weights are kept non-negative by descending on
``u`` with ``w = u**2``.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .autodiff import backward_fit
from .errors import DivergedState, InvalidConfig
from .geoloss import LossConfig, geometric_loss_line
from .linfit import CurveParams, WeightedPointSet, as_coeffs, solve_weighted_ls

MODES = ("coords", "weights", "both")


@dataclass(frozen=True)
class ToyConfig:
    mode: str
    points: WeightedPointSet = None
    target: CurveParams = field(default_factory=lambda: CurveParams([0.2, 0.6]))
    lr: float = 0.5
    steps: int = 200
    t: float = 1.0
    seed: int = 0
    # used only when points are auto-generated
    n_points: int = 8
    noise: float = 0.15

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (np.isfinite(self.lr) and self.lr >= 0):
            raise InvalidConfig(f"lr must be >= 0, got {self.lr!r}")
        if self.steps < 0:
            raise InvalidConfig(f"steps must be >= 0, got {self.steps!r}")
        if as_coeffs(self.target).size != 2:
            raise InvalidConfig("the toy target must be a line (2 coefficients)")
        if self.n_points < 2:
            raise InvalidConfig("n_points must be >= 2")
        LossConfig(t=self.t)
        if self.points is None:
            object.__setattr__(self, "points", default_points(
                self.target, self.n_points, self.noise, self.seed))

    @property
    def loss_config(self):
        return LossConfig(t=self.t)


def default_points(target, n_points=8, noise=0.15, seed=0):
    """Points equally spaced on ``[0, 1]``, lifted off ``target`` by seeded noise."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n_points)
    ys = CurveParams(as_coeffs(target))(xs) + rng.normal(0.0, noise, n_points)
    return WeightedPointSet(xs, ys, np.ones(n_points))


# Learning rates validated to reach loss < 1e-6 within 200 steps.
DEFAULT_LR = {"coords": 0.5, "weights": 4.0, "both": 0.5}


def default_config(mode):
    return ToyConfig(mode=mode, lr=DEFAULT_LR[mode])


@dataclass(frozen=True)
class ToyRecord:
    step: int
    loss: float
    beta: np.ndarray
    points: WeightedPointSet


@dataclass
class Trajectory:
    records: list
    error: Exception = None

    def __len__(self):
        return len(self.records)

    @property
    def losses(self):
        return np.array([r.loss for r in self.records])

    def to_csv(self):
        m = len(self.records[0].points)
        header = ["step", "loss", "beta0", "beta1"]
        header += [f"x_{i}" for i in range(m)]
        header += [f"y_{i}" for i in range(m)]
        header += [f"w_{i}" for i in range(m)]
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for r in self.records:
            vals = [str(r.step), repr(r.loss)] + [repr(float(b)) for b in r.beta]
            p = r.points
            vals += [repr(float(v)) for v in np.concatenate([p.xs, p.ys, p.ws])]
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()


def _fit_and_loss(state, cfg):
    beta, ctx = solve_weighted_ls(state, 2)
    loss, g = geometric_loss_line(beta, cfg.target, cfg.loss_config)
    if not np.isfinite(loss):
        raise DivergedState(f"loss became {loss!r}")
    return beta, ctx, loss, g


def toy_step(state, cfg):
    """One descent update. Returns ``(new_state, loss, beta)`` where loss/beta
    describe the fit of the incoming ``state``."""
    beta, ctx, loss, g = _fit_and_loss(state, cfg)
    grads = backward_fit(ctx, g)
    xs, ys, ws = state.xs, state.ys, state.ws
    if cfg.mode in ("coords", "both"):
        xs = xs - cfg.lr * grads.d_x
        ys = ys - cfg.lr * grads.d_y
    if cfg.mode in ("weights", "both"):
        u = np.sqrt(ws)
        u = u - cfg.lr * grads.d_w * 2.0 * u
        ws = u * u
    new_state = WeightedPointSet(xs, ys, ws)
    if not all(np.all(np.isfinite(a)) for a in (new_state.xs, new_state.ys, new_state.ws)):
        raise DivergedState("point set became non-finite")
    return new_state, loss, beta


def run_toy(cfg):
    """Run ``cfg.steps`` descent steps; the trajectory includes the initial state.

    A failing step ends the run early; the partial trajectory is returned with
    ``error`` set.
    """
    state = cfg.points
    records = []
    try:
        for step in range(cfg.steps):
            new_state, loss, beta = toy_step(state, cfg)
            records.append(ToyRecord(step, loss, beta.coeffs, state))
            state = new_state
        beta, _, loss, _ = _fit_and_loss(state, cfg)
        records.append(ToyRecord(cfg.steps, loss, beta.coeffs, state))
    except (ArithmeticError, DivergedState) as exc:
        return Trajectory(records, error=exc)
    return Trajectory(records)


def render_frame_svg(record, target, size=400, margin=30, max_radius=12.0):
    """SVG of one step: points as circles (radius grows with weight),
    fitted line in blue, target line in green."""
    p = record.points
    lo_x = min(0.0, float(p.xs.min()))
    hi_x = max(1.0, float(p.xs.max()))
    line_x = np.array([lo_x, hi_x])
    fit_y = CurveParams(record.beta)(line_x)
    tgt_y = CurveParams(as_coeffs(target))(line_x)
    all_y = np.concatenate([p.ys, fit_y, tgt_y])
    lo_y, hi_y = float(all_y.min()), float(all_y.max())
    if hi_y - lo_y < 1e-9:
        lo_y, hi_y = lo_y - 0.5, hi_y + 0.5
    span = size - 2 * margin

    def sx(x):
        return margin + (x - lo_x) / (hi_x - lo_x) * span

    def sy(y):
        return size - margin - (y - lo_y) / (hi_y - lo_y) * span

    wmax = float(p.ws.max()) if p.ws.max() > 0 else 1.0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{sx(line_x[0]):.3f}" y1="{sy(tgt_y[0]):.3f}" '
        f'x2="{sx(line_x[1]):.3f}" y2="{sy(tgt_y[1]):.3f}" stroke="green" stroke-width="2"/>',
        f'<line x1="{sx(line_x[0]):.3f}" y1="{sy(fit_y[0]):.3f}" '
        f'x2="{sx(line_x[1]):.3f}" y2="{sy(fit_y[1]):.3f}" stroke="blue" stroke-width="2"/>',
    ]
    for x, y, w in zip(p.xs, p.ys, p.ws):
        r = max_radius * w / wmax
        out.append(f'<circle cx="{sx(x):.3f}" cy="{sy(y):.3f}" r="{r:.3f}" '
                   f'fill="blue" fill-opacity="0.6"/>')
    out.append(f'<text x="{margin}" y="{margin - 10}" font-size="12">'
               f'step {record.step} loss {record.loss:.3e}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
