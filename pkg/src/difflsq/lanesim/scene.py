"""Synthetic lane scenes.

A scene is a dark road image with bright lane markings. Ground-truth lane
lines are parabolas ``lateral = c + b z + a z**2`` in a top-down frame,
where ``z`` is the normalized distance ahead of the vehicle. Markings are
drawn by pushing dense curve samples through the inverse homography into
the image and shading pixels by their distance to the projected curve.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidConfig
from ..homography import Homography, transform_xy
from ..linfit import CurveParams, evaluate_curve


def ground_plane_homography(horizon=-0.25, z_far=1.2, lateral_scale=0.5):
    """Pinhole ground-plane map from normalized image coords to ``(z, lateral)``.

    The bottom image row maps to ``z = 0`` and the top row to ``z = z_far``.
    ``horizon`` is the (negative, i.e. above-image) row of the vanishing line.
    """
    if horizon >= 0:
        raise InvalidConfig("horizon must lie above the image (horizon < 0)")
    if z_far <= 0:
        raise InvalidConfig("z_far must be > 0")
    # z(y) = alpha / (y - horizon) + offset, with z(1) = 0 and z(0) = z_far
    alpha = z_far / (1.0 / -horizon - 1.0 / (1.0 - horizon))
    offset = -alpha / (1.0 - horizon)
    return Homography([
        [0.0, offset, alpha - offset * horizon],
        [lateral_scale, 0.0, -0.5 * lateral_scale],
        [0.0, 1.0, -horizon],
    ])


@dataclass(frozen=True)
class SceneConfig:
    height: int = 64
    width: int = 128
    k: int = 2
    t: float = 1.0
    homography: Homography = field(default_factory=ground_plane_homography)
    # ego-lane geometry (ortho units)
    half_width: tuple = (0.11, 0.15)
    center_offset: tuple = (-0.02, 0.02)
    slope: tuple = (-0.08, 0.08)
    curvature: tuple = (-0.1, 0.1)
    line_spacing: float = 0.0     # extra lateral gap between lines beyond the ego pair
    # rendering
    half_thickness: tuple = (1.0, 1.5)   # pixels
    background: tuple = (0.05, 0.15)
    marking: tuple = (0.8, 1.0)
    noise: float = 0.03
    dash_prob: float = 0.5
    dash_period: float = 0.25
    dash_duty: float = 0.6
    distractor_prob: float = 0.0
    distractor_count: tuple = (1, 2)
    distractor_sigma: tuple = (2.5, 4.0)   # pixels
    distractor_amplitude: tuple = (0.6, 0.9)
    label_half_thickness: float = 1.5
    view_margin: float = 0.02

    def __post_init__(self):
        if self.height < 16 or self.width < 16:
            raise InvalidConfig("scene height and width must be >= 16")
        if self.k < 1:
            raise InvalidConfig("k must be >= 1")
        if self.noise < 0:
            raise InvalidConfig("noise must be >= 0")
        if not 0 < self.t <= _top_row_z(self.homography):
            raise InvalidConfig("t must lie in (0, z at the top image row]")
        for name in ("half_width", "center_offset", "slope", "curvature", "half_thickness",
                     "background", "marking", "distractor_sigma", "distractor_amplitude"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidConfig(f"{name}: lower bound exceeds upper bound")
        if not 0 <= self.dash_prob <= 1 or not 0 <= self.distractor_prob <= 1:
            raise InvalidConfig("probabilities must lie in [0, 1]")
        if not 0 < self.dash_duty <= 1:
            raise InvalidConfig("dash_duty must lie in (0, 1]")


@dataclass(frozen=True)
class Blob:
    row: float
    col: float
    sigma: float
    amplitude: float


@dataclass(frozen=True)
class SyntheticScene:
    gt_curves: tuple
    image: np.ndarray
    homography: Homography
    seed: int
    noise: float
    half_thickness: float = 0.0
    dashed: tuple = ()
    blobs: tuple = ()
    t: float = 1.0

    @property
    def shape(self):
        return self.image.shape

    @property
    def k(self):
        return len(self.gt_curves)


def pixel_grid(height, width):
    """Normalized coordinate maps: upper-left pixel (0, 0), lower-right (1, 1)."""
    ys, xs = np.meshgrid(np.linspace(0.0, 1.0, height), np.linspace(0.0, 1.0, width),
                         indexing="ij")
    return xs, ys


def project_curve(curve, H, height, width, z_max, samples=800):
    """Image-pixel ``(row, col)`` samples of an ortho-frame curve."""
    z = np.linspace(0.0, z_max, samples)
    lat = evaluate_curve(curve, z)
    x, y = transform_xy(H.inverse(), z, lat)
    return np.column_stack([y * (height - 1), x * (width - 1)]), z


def curve_distance(curve, H, height, width, z_max, keep=None):
    """Pixel distance from every pixel centre to the projected curve."""
    pts, z = project_curve(curve, H, height, width, z_max)
    if keep is not None:
        pts = pts[keep(z)]
    rows, cols = np.mgrid[0:height, 0:width]
    grid = np.column_stack([rows.ravel(), cols.ravel()]).astype(np.float64)
    dist, _ = cKDTree(pts).query(grid)
    return dist.reshape(height, width)


def _sample_curves(rng, cfg):
    hw = rng.uniform(*cfg.half_width)
    center = rng.uniform(*cfg.center_offset)
    slope = rng.uniform(*cfg.slope)
    curv = rng.uniform(*cfg.curvature)
    # K lines ordered left to right; the middle pair bounds the ego lane
    offsets = []
    for j in range(cfg.k):
        rank = j - (cfg.k - 1) / 2.0
        offsets.append(center + rank * 2.0 * (hw + cfg.line_spacing))
    curves = []
    for c in offsets:
        jitter = rng.normal(0.0, 0.01, 2)
        curves.append(CurveParams([c, slope + jitter[0], curv + jitter[1]]))
    return tuple(curves)


def _inside_view(curves, cfg):
    H = cfg.homography
    inv = H.inverse()
    z = np.linspace(0.0, cfg.t, 50)
    m = cfg.view_margin
    for c in curves:
        x, y = transform_xy(inv, z, evaluate_curve(c, z))
        if np.any(x < m) or np.any(x > 1 - m) or np.any(y < -1e-9) or np.any(y > 1 + 1e-9):
            return False
    return True


def generate_scene(seed, cfg=None, *, dashes=None, distractors=None):
    """Render a deterministic scene from ``seed``.

    ``dashes`` and ``distractors`` force those features on or off; by default
    they are drawn with the configured probabilities.
    """
    cfg = SceneConfig() if cfg is None else cfg
    rng = np.random.default_rng([int(seed), 0x1A5E])
    H = cfg.homography
    for _ in range(1000):
        curves = _sample_curves(rng, cfg)
        if _inside_view(curves, cfg):
            break
    else:
        raise InvalidConfig("could not sample lane curves inside the view window")

    h, w = cfg.height, cfg.width
    z_top = _top_row_z(H)
    bg = rng.uniform(*cfg.background)
    half = rng.uniform(*cfg.half_thickness)
    image = np.full((h, w), bg)
    dashed = []
    near = np.full((h, w), np.inf)
    for curve in curves:
        is_dashed = rng.uniform() < cfg.dash_prob if dashes is None else bool(dashes)
        phase = rng.uniform()
        bright = rng.uniform(*cfg.marking)
        keep = None
        if is_dashed:
            def keep(z, phase=phase):
                return np.mod(z / cfg.dash_period + phase, 1.0) < cfg.dash_duty
        dist = curve_distance(curve, H, h, w, z_top, keep)
        near = np.minimum(near, curve_distance(curve, H, h, w, z_top))
        coverage = np.clip(half - dist, 0.0, 1.0)
        image = np.maximum(image, bg + (bright - bg) * coverage)
        dashed.append(is_dashed)

    blobs = []
    use_blobs = rng.uniform() < cfg.distractor_prob if distractors is None else bool(distractors)
    if use_blobs:
        count = int(rng.integers(cfg.distractor_count[0], cfg.distractor_count[1] + 1))
        rows, cols = np.mgrid[0:h, 0:w]
        for _ in range(count):
            sigma = rng.uniform(*cfg.distractor_sigma)
            amp = rng.uniform(*cfg.distractor_amplitude)
            for _ in range(200):
                r, c = rng.uniform(2 * sigma, h - 1 - 2 * sigma), rng.uniform(2 * sigma, w - 1 - 2 * sigma)
                if near[int(round(r)), int(round(c))] > 3.0 * sigma + half:
                    break
            else:
                continue
            blob = amp * np.exp(-((rows - r) ** 2 + (cols - c) ** 2) / (2 * sigma**2))
            image = np.maximum(image, bg + blob)
            blobs.append(Blob(r, c, sigma, amp))

    if cfg.noise > 0:
        image = image + rng.normal(0.0, cfg.noise, image.shape)
    image = np.clip(image, 0.0, 1.0)
    image.flags.writeable = False
    return SyntheticScene(gt_curves=curves, image=image, homography=H, seed=int(seed),
                          noise=cfg.noise, half_thickness=half, dashed=tuple(dashed),
                          blobs=tuple(blobs), t=cfg.t)


def marking_labels(scene, half_thickness=1.5, z_max=None):
    """Dense binary masks (K, H, W): each gt curve drawn with a fixed thickness."""
    h, w = scene.shape
    if z_max is None:
        z_max = _top_row_z(scene.homography)
    return np.stack([
        (curve_distance(c, scene.homography, h, w, z_max) <= half_thickness).astype(np.float64)
        for c in scene.gt_curves
    ])


def marking_coverage(scene, z_max=None):
    """Anti-aliased solid (undashed) marking masks (K, H, W) at the rendered thickness."""
    h, w = scene.shape
    if z_max is None:
        z_max = _top_row_z(scene.homography)
    return np.stack([
        np.clip(scene.half_thickness - curve_distance(c, scene.homography, h, w, z_max), 0.0, 1.0)
        for c in scene.gt_curves
    ])


def distance_to_curves(scene, z_max=None):
    """Pixel distance to the nearest gt curve, shape (H, W)."""
    h, w = scene.shape
    if z_max is None:
        z_max = _top_row_z(scene.homography)
    return np.min([curve_distance(c, scene.homography, h, w, z_max)
                   for c in scene.gt_curves], axis=0)


def distractor_mask(scene, radius_sigmas=2.0):
    """Pixels within ``radius_sigmas * sigma`` of any distractor blob centre."""
    h, w = scene.shape
    rows, cols = np.mgrid[0:h, 0:w]
    mask = np.zeros((h, w), dtype=bool)
    for b in scene.blobs:
        mask |= (rows - b.row) ** 2 + (cols - b.col) ** 2 <= (radius_sigmas * b.sigma) ** 2
    return mask


def _top_row_z(H):
    z, _ = transform_xy(H, np.array([0.5]), np.array([0.0]))
    return float(z[0])
