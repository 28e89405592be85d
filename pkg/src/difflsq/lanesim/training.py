"""End-to-end and cross-entropy training of the weight generator, and evaluation.

End-to-end: weights -> homography -> weighted parabola fit -> geometric
loss, with the gradient pulled back through the fit into the generator.
Cross-entropy: per-pixel logistic loss against rendered marking masks; the
parabola is fitted afterwards through the thresholded predictions.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import backward_fit
from ..errors import DegenerateSystem, DivergedState, InvalidConfig
from ..geoloss import LossConfig, area_error, geometric_loss_parabola
from ..homography import backward_transform, transform_points
from ..linfit import WeightedPointSet, solve_weighted_ls
from .generator import WeightGenerator, design_matrix, forward_weights, weight_maps
from .scene import distractor_mask, marking_labels, pixel_grid

log = logging.getLogger(__name__)

MODES = ("end_to_end", "two_step")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    lr: float = 1.0
    batch_size: int = 8
    t: float = 1.0
    seed: int = 0
    init_scale: float = 0.1
    init_bias: float = 0.5
    threshold: float = 0.5
    error_cap: float = 1.0
    label_half_thickness: float = 1.5

    def __post_init__(self):
        if self.epochs < 0:
            raise InvalidConfig("epochs must be >= 0")
        if not (np.isfinite(self.lr) and self.lr >= 0):
            raise InvalidConfig("lr must be >= 0")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if not 0 < self.threshold < 1:
            raise InvalidConfig("threshold must lie in (0, 1)")
        LossConfig(t=self.t)

    @property
    def loss_config(self):
        return LossConfig(t=self.t)


@dataclass
class SceneData:
    """Per-scene quantities that stay fixed during training."""

    design: np.ndarray
    u: np.ndarray        # ortho longitudinal coordinate per pixel
    v: np.ndarray        # ortho lateral coordinate per pixel
    gt: np.ndarray       # (K, 3)
    labels: np.ndarray = None


def prepare(scene, labels=False, label_half_thickness=1.5):
    xs, ys = pixel_grid(*scene.shape)
    ortho = transform_points(scene.homography, WeightedPointSet.unweighted(xs.ravel(), ys.ravel()))
    lab = None
    if labels:
        lab = marking_labels(scene, label_half_thickness).reshape(scene.k, -1)
    return SceneData(design=design_matrix(scene.image), u=ortho.xs, v=ortho.ys,
                     gt=np.array([c.coeffs for c in scene.gt_curves]), labels=lab)


def _squared_scores(params, design):
    with np.errstate(over="ignore", invalid="ignore"):
        s = params @ design.T
        w = s * s
    if not np.all(np.isfinite(w)):
        raise DivergedState("generator weights overflowed")
    return s, w


def e2e_loss_grad(params, data, cfg):
    """Mean geometric loss over the K curves of one scene and its parameter gradient."""
    k = params.shape[0]
    s, w = _squared_scores(params, data.design)
    total = 0.0
    grad = np.zeros_like(params)
    for j in range(k):
        beta, ctx = solve_weighted_ls(WeightedPointSet(data.u, data.v, w[j]), 3)
        loss, g = geometric_loss_parabola(beta, data.gt[j], cfg.loss_config)
        grads = backward_fit(ctx, g)
        grad[j] = data.design.T @ (grads.d_w * 2.0 * s[j])
        total += loss
    return total / k, grad / k


def pipeline_loss(gen, scene, t=1.0):
    """Literal forward chain: weights -> transform -> fit -> geometric loss (mean over curves)."""
    cfg = LossConfig(t=t)
    total = 0.0
    for pts, gt in zip(forward_weights(gen, scene), scene.gt_curves):
        beta, _ = solve_weighted_ls(transform_points(scene.homography, pts), 3)
        total += geometric_loss_parabola(beta, gt, cfg)[0]
    return total / scene.k


def pipeline_grad(gen, scene, t=1.0):
    """Reverse pass of :func:`pipeline_loss`.

    Returns ``(loss, d_params, d_coords)`` where ``d_coords`` holds the
    gradients with respect to the image-frame coordinate maps (K, 2, m).
    """
    cfg = LossConfig(t=t)
    design = design_matrix(scene.image)
    s = gen.scores(design)
    total = 0.0
    d_params = np.zeros_like(gen.params)
    d_coords = []
    for j, (pts, gt) in enumerate(zip(forward_weights(gen, scene), scene.gt_curves)):
        ortho = transform_points(scene.homography, pts)
        beta, ctx = solve_weighted_ls(ortho, 3)
        loss, g = geometric_loss_parabola(beta, gt, cfg)
        grads = backward_fit(ctx, g)
        d_coords.append(backward_transform(scene.homography, pts, grads.d_x, grads.d_y))
        d_params[j] = design.T @ (grads.d_w * 2.0 * s[j])
        total += loss
    k = scene.k
    return total / k, d_params / k, np.array(d_coords) / k


def _softplus(z):
    return np.logaddexp(0.0, z)


def xent_loss_grad(params, data):
    """Mean per-pixel binary cross-entropy over all K maps and its gradient."""
    with np.errstate(over="ignore", invalid="ignore"):
        s = params @ data.design.T
        y = data.labels
        loss = float(np.mean(_softplus(s) - y * s))
    p = 0.5 * (1.0 + np.tanh(0.5 * s))    # overflow-free sigmoid
    grad = (p - y) @ data.design / s.size
    return loss, grad


@dataclass
class EvalResult:
    mean_error: float
    errors: np.ndarray          # (scenes, K), capped entries included
    degenerate: int


def fit_weights(gen_params, data, mode, threshold=0.5):
    """Per-map fitting weights in the style of ``mode``."""
    if mode == "end_to_end":
        return _squared_scores(gen_params, data.design)[1]
    s = gen_params @ data.design.T
    if mode == "two_step":
        p = 0.5 * (1.0 + np.tanh(0.5 * s))
        return (p >= threshold).astype(np.float64)
    raise InvalidConfig(f"mode must be one of {MODES}, got {mode!r}")


def evaluate(gen, data, mode, cfg=TrainConfig()):
    """Mean normalized area error over every curve of every scene.

    ``data`` is a sequence of :class:`SceneData` (or scenes, prepared on the fly).
    Degenerate fits count as ``cfg.error_cap`` and are tallied separately.
    """
    data = [d if isinstance(d, SceneData) else prepare(d) for d in data]
    if not data:
        raise InvalidConfig("cannot evaluate on an empty scene set")
    params = gen.params if isinstance(gen, WeightGenerator) else np.asarray(gen)
    lc = cfg.loss_config
    errors = np.empty((len(data), params.shape[0]))
    degenerate = 0
    for i, d in enumerate(data):
        w = fit_weights(params, d, mode, cfg.threshold)
        for j in range(params.shape[0]):
            try:
                beta, _ = solve_weighted_ls(WeightedPointSet(d.u, d.v, w[j]), 3)
                errors[i, j] = min(area_error(beta, d.gt[j], lc), cfg.error_cap)
            except DegenerateSystem:
                errors[i, j] = cfg.error_cap
                degenerate += 1
    return EvalResult(float(errors.mean()), errors, degenerate)


def distractor_weight_fraction(gen, scenes, radius_sigmas=2.0):
    """Share of total fitting weight (all maps, all scenes) that lands on distractor blobs."""
    on_blobs = total = 0.0
    for scene in scenes:
        w = weight_maps(gen, scene).sum(axis=0)
        on_blobs += float(w[distractor_mask(scene, radius_sigmas)].sum())
        total += float(w.sum())
    if total <= 0.0:
        raise DegenerateSystem("generator assigns zero weight everywhere")
    return on_blobs / total


@dataclass
class TrainReport:
    regime: str
    epochs: list = field(default_factory=list)   # (epoch, train_loss, val_error)
    params: np.ndarray = None
    skipped: int = 0
    wall_clock: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def train_loss(self):
        return np.array([e[1] for e in self.epochs])

    @property
    def val_error(self):
        return np.array([e[2] for e in self.epochs])

    def to_csv(self):
        lines = ["epoch,train_loss,val_error"]
        lines += [f"{e},{loss!r},{err!r}" for e, loss, err in self.epochs]
        return "\n".join(lines) + "\n"

    def same_run(self, other):
        """Equality of everything except wall-clock time."""
        return (self.regime == other.regime and self.epochs == other.epochs
                and self.skipped == other.skipped
                and np.array_equal(self.params, other.params))


def _train(regime, train, val, cfg, k):
    if not train or not val:
        raise InvalidConfig("training needs non-empty train and validation sets")
    start = time.perf_counter()
    gen = WeightGenerator.initial(k, cfg.seed, cfg.init_scale, cfg.init_bias)
    params = gen.params
    mode = "end_to_end" if regime == "end2end" else "two_step"
    rng = np.random.default_rng([int(cfg.seed), 0x7EA1])
    report = TrainReport(regime=regime, metadata={
        "optimizer": "plain gradient descent, fixed learning rate",
        "lr": cfg.lr, "batch_size": cfg.batch_size, "seed": cfg.seed,
    })
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train))
        losses = []
        for lo in range(0, len(order), cfg.batch_size):
            grad = np.zeros_like(params)
            used = 0
            for idx in order[lo:lo + cfg.batch_size]:
                try:
                    if regime == "end2end":
                        loss, g = e2e_loss_grad(params, train[idx], cfg)
                    else:
                        loss, g = xent_loss_grad(params, train[idx])
                except DegenerateSystem as exc:
                    log.debug("epoch %d: skipping scene %d (%s)", epoch, idx, exc)
                    report.skipped += 1
                    continue
                if not np.isfinite(loss):
                    raise DivergedState(f"non-finite training loss at epoch {epoch}")
                losses.append(loss)
                grad += g
                used += 1
            if used:
                params = params - cfg.lr * grad / used
        if not np.all(np.isfinite(params)):
            raise DivergedState(f"parameters became non-finite at epoch {epoch}")
        val_err = evaluate(params, val, mode, cfg).mean_error
        train_loss = float(np.mean(losses)) if losses else float("nan")
        report.epochs.append((epoch, train_loss, val_err))
        log.info("%s epoch %d: train_loss=%.4e val_error=%.4e", regime, epoch, train_loss, val_err)
    report.params = params
    report.wall_clock = time.perf_counter() - start
    return report


def train_end_to_end(train, val, cfg=TrainConfig()):
    """Train through the fit with the geometric loss. ``train``/``val`` hold :class:`SceneData`."""
    return _train("end2end", train, val, cfg, train[0].gt.shape[0] if train else 0)


def train_cross_entropy(train, val, cfg=TrainConfig()):
    """Train with per-pixel cross-entropy; ``train`` scenes need labels."""
    if train and train[0].labels is None:
        raise InvalidConfig("cross-entropy training needs labelled scenes (prepare(labels=True))")
    return _train("xent", train, val, cfg, train[0].gt.shape[0] if train else 0)
