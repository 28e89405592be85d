"""A tiny per-pixel weight generator.

Each of the K output maps is a linear scorer over 11 fixed features per
pixel: the pixel intensity, its 8 neighbours, and the normalized x and y
coordinates. The raw score ``s`` is squared to give a non-negative weight.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfig
from ..linfit import WeightedPointSet
from .scene import pixel_grid

N_FEATURES = 11
N_PARAMS = N_FEATURES + 1

# neighbour offsets (row, col), centre excluded
NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def pixel_features(image):
    """Feature matrix of shape (H*W, 11), rows in row-major pixel order."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    padded = np.pad(image, 1, mode="edge")
    cols = [image.ravel()]
    for dr, dc in NEIGHBOURS:
        cols.append(padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w].ravel())
    xs, ys = pixel_grid(h, w)
    cols += [xs.ravel(), ys.ravel()]
    return np.column_stack(cols)


def design_matrix(image):
    """Pixel features with a trailing column of ones for the bias."""
    f = pixel_features(image)
    return np.hstack([f, np.ones((f.shape[0], 1))])


@dataclass
class WeightGenerator:
    """``params`` has shape (K, 12): 11 feature weights then the bias."""

    params: np.ndarray

    def __post_init__(self):
        p = np.array(self.params, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != N_PARAMS:
            raise InvalidConfig(f"generator params must have shape (K, {N_PARAMS}), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InvalidConfig("generator params must be finite")
        self.params = p

    @property
    def k(self):
        return self.params.shape[0]

    @classmethod
    def zeros(cls, k):
        return cls(np.zeros((k, N_PARAMS)))

    @classmethod
    def initial(cls, k, seed, scale=0.1, bias=0.5):
        rng = np.random.default_rng([int(seed), 0x6E4])
        p = rng.normal(0.0, scale, (k, N_PARAMS))
        p[:, -1] += bias
        return cls(p)

    def scores(self, design):
        """Raw scores, shape (K, m), for a design matrix from :func:`design_matrix`."""
        return self.params @ design.T

    def copy(self):
        return WeightGenerator(self.params.copy())


def forward_weights(gen, scene):
    """K weighted point sets in normalized image coordinates, ``w = s**2``."""
    if gen.k != scene.k:
        raise InvalidConfig(f"generator has {gen.k} maps but the scene has {scene.k} curves")
    design = design_matrix(scene.image)
    s = gen.scores(design)
    xs, ys = pixel_grid(*scene.shape)
    return [WeightedPointSet(xs.ravel(), ys.ravel(), sk * sk) for sk in s]


def weight_maps(gen, scene):
    """Weight maps of shape (K, H, W)."""
    return np.stack([p.ws.reshape(scene.shape) for p in forward_weights(gen, scene)])
