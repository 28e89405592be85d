"""Binary scene files, scene-set indexes, and generator parameter tables.

Scene file layout (all little-endian)::

    b"LSIM1"                 magic
    uint32 H, uint32 W, uint32 K
    float64[H*W]             image, row-major
    float64[K*3]             gt coefficients, constant term first
    float64[9]               homography, row-major
"""

import csv
import io
import struct

import numpy as np

from ..errors import InvalidConfig
from ..homography import Homography
from ..linfit import CurveParams
from .generator import N_PARAMS, WeightGenerator
from .scene import SyntheticScene

MAGIC = b"LSIM1"
_HEADER = struct.Struct("<5sIII")

PARAM_COLUMNS = ["map", "f_center", "f_nw", "f_n", "f_ne", "f_w", "f_e", "f_sw", "f_s", "f_se",
                 "f_x", "f_y", "bias"]


def scene_to_bytes(scene):
    h, w = scene.shape
    k = scene.k
    gt = np.array([c.coeffs for c in scene.gt_curves], dtype="<f8")
    if gt.shape != (k, 3):
        raise InvalidConfig("scene files store parabolas (3 coefficients per curve)")
    return b"".join([
        _HEADER.pack(MAGIC, h, w, k),
        np.ascontiguousarray(scene.image, dtype="<f8").tobytes(),
        gt.tobytes(),
        np.ascontiguousarray(scene.homography.h, dtype="<f8").tobytes(),
    ])


def scene_from_bytes(data, seed=-1, noise=float("nan"), t=1.0):
    if len(data) < _HEADER.size:
        raise InvalidConfig("scene file is truncated")
    magic, h, w, k = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise InvalidConfig(f"bad scene magic {magic!r}")
    expected = _HEADER.size + 8 * (h * w + 3 * k + 9)
    if len(data) != expected:
        raise InvalidConfig(f"scene file has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    image = values[:h * w].reshape(h, w)
    gt = values[h * w:h * w + 3 * k].reshape(k, 3)
    H = values[h * w + 3 * k:]
    image.flags.writeable = False
    return SyntheticScene(gt_curves=tuple(CurveParams(c) for c in gt), image=image,
                          homography=Homography(H), seed=seed, noise=noise, t=t)


def read_scene(path, **kwargs):
    with open(path, "rb") as fh:
        return scene_from_bytes(fh.read(), **kwargs)


def index_csv(rows):
    """Scene-set index: one row per scene file."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "file", "split", "seed", "noise", "dashed", "blobs"])
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def params_to_csv(gen):
    buf = io.StringIO()
    buf.write(",".join(PARAM_COLUMNS) + "\n")
    for j, row in enumerate(gen.params):
        buf.write(",".join([str(j)] + [repr(float(v)) for v in row]) + "\n")
    return buf.getvalue()


def params_from_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != PARAM_COLUMNS:
        raise InvalidConfig("parameter file has an unexpected header")
    rows = [[float(v) for v in r[1:]] for r in reader if r]
    if not rows or any(len(r) != N_PARAMS for r in rows):
        raise InvalidConfig("parameter file is malformed")
    return WeightGenerator(np.array(rows))
