"""Experiment configuration files.

Plain INI-style text with one section per component::

    [output]
    dir = runs/demo

    [toy]
    mode = weights
    lr = 4.0

    [homography]
    h = 0 -0.3 0.30 0.5 0 -0.25 0 1 0.25

Unknown sections or keys are rejected. Every error message carries the
offending line number and ``section.key``.
"""

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .homography import Homography
from .lanesim.scene import SceneConfig, ground_plane_homography
from .lanesim.training import TrainConfig
from .linfit import CurveParams
from .toy import DEFAULT_LR, MODES, ToyConfig

OUTPUT_ROOT_ENV = "DIFFLSQ_OUTPUT_ROOT"


class ConfigError(InvalidConfig):
    pass


def _floats(count):
    def parse(text):
        vals = [float(v) for v in text.replace(",", " ").split()]
        if len(vals) != count:
            raise ValueError(f"expected {count} numbers, got {len(vals)}")
        return tuple(vals)
    return parse


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _positive(v):
    return None if v > 0 else "must be > 0"


def _non_negative(v):
    return None if v >= 0 else "must be >= 0"


def _at_least(lo):
    return lambda v: None if v >= lo else f"must be >= {lo}"


def _unit_interval(v):
    return None if 0 <= v <= 1 else "must lie in [0, 1]"


def _open_unit(v):
    return None if 0 < v < 1 else "must lie in (0, 1)"


def _ordered(v):
    return None if v[0] <= v[1] else "lower bound exceeds upper bound"


def _mode(v):
    return None if v in MODES else f"must be one of {', '.join(MODES)}"


# section -> key -> (parser, validator or None)
SCHEMA = {
    "output": {"dir": (str, None)},
    "toy": {
        "mode": (str, _mode),
        "lr": (float, _non_negative),
        "steps": (int, _non_negative),
        "t": (float, _positive),
        "seed": (int, _non_negative),
        "n_points": (int, _at_least(2)),
        "noise": (float, _non_negative),
        "target": (_floats(2), None),
        "frames": (_bool, None),
    },
    "scenes": {
        "height": (int, _at_least(16)),
        "width": (int, _at_least(16)),
        "k": (int, _at_least(1)),
        "t": (float, _positive),
        "noise": (float, _non_negative),
        "dash_prob": (float, _unit_interval),
        "distractor_prob": (float, _unit_interval),
        "half_width": (_floats(2), _ordered),
        "center_offset": (_floats(2), _ordered),
        "slope": (_floats(2), _ordered),
        "curvature": (_floats(2), _ordered),
        "half_thickness": (_floats(2), _ordered),
        "train_count": (int, _at_least(1)),
        "val_count": (int, _at_least(1)),
        "seed": (int, _non_negative),
    },
    "homography": {
        "h": (_floats(9), None),
        "horizon": (float, lambda v: None if v < 0 else "must be < 0"),
        "z_far": (float, _positive),
        "lateral_scale": (float, _positive),
    },
    "train": {
        "epochs": (int, _non_negative),
        "lr_end2end": (float, _non_negative),
        "lr_xent": (float, _non_negative),
        "batch_size": (int, _at_least(1)),
        "seed": (int, _non_negative),
        "threshold": (float, _open_unit),
        "error_cap": (float, _positive),
        "label_half_thickness": (float, _positive),
        "init_scale": (float, _non_negative),
        "init_bias": (float, None),
    },
    "eval": {
        "distractor_count": (int, _at_least(1)),
        "distractor_seed": (int, _non_negative),
        "radius_sigmas": (float, _positive),
    },
}


@dataclass
class ExperimentConfig:
    path: str = "<defaults>"
    output_dir: str = "out"
    toy: dict = field(default_factory=dict)
    scene: SceneConfig = field(default_factory=SceneConfig)
    train_count: int = 200
    val_count: int = 50
    scene_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    lr_end2end: float = 100.0
    lr_xent: float = 30.0
    distractor_count: int = 20
    distractor_seed: int = 5000
    radius_sigmas: float = 2.0
    frames: bool = True

    def toy_config(self, mode=None):
        opts = dict(self.toy)
        mode = mode or opts.pop("mode", "weights")
        opts.pop("mode", None)
        if "target" in opts:
            opts["target"] = CurveParams(opts["target"])
        opts.setdefault("lr", DEFAULT_LR.get(mode, 0.5))
        return ToyConfig(mode=mode, **opts)

    def train_seeds(self):
        return list(range(self.scene_seed, self.scene_seed + self.train_count))

    def val_seeds(self):
        start = self.scene_seed + self.train_count
        return list(range(start, start + self.val_count))

    def distractor_seeds(self):
        return list(range(self.distractor_seed, self.distractor_seed + self.distractor_count))

    def regime_train_config(self, regime):
        lr = self.lr_end2end if regime == "end2end" else self.lr_xent
        return TrainConfig(**{**self.train.__dict__, "lr": lr})

    def resolve_output(self, override=None):
        out = override or self.output_dir
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(out):
            out = os.path.join(root, out)
        return out


def _line_numbers(text):
    """Map (section, key) -> 1-based line number."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            lines[(section, None)] = i
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    lines[(section, line.split(sep, 1)[0].strip().lower())] = i
                    break
    return lines


def parse_config(text, path="<string>"):
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        if lineno is None and getattr(exc, "errors", None):
            lineno = exc.errors[0][0]
        where = f"{path}:{lineno}" if lineno else path
        raise ConfigError(f"{where}: {exc.message.splitlines()[0] if hasattr(exc, 'message') else exc}") from exc

    lines = _line_numbers(text)
    values = {}
    for section in parser.sections():
        where = f"{path}:{lines.get((section, None), '?')}"
        if section not in SCHEMA:
            raise ConfigError(f"{where}: unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            where = f"{path}:{lines.get((section, key), '?')}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"{where}: unknown key {section}.{key}")
            conv, check = SCHEMA[section][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: {section}.{key}: {exc}") from exc
            if isinstance(value, float) and not np.isfinite(value):
                raise ConfigError(f"{where}: {section}.{key}: must be finite")
            problem = check(value) if check else None
            if problem:
                raise ConfigError(f"{where}: {section}.{key} = {raw!r} {problem}")
            values[section][key] = value
    try:
        return _build(values, path, lines)
    except ConfigError:
        raise
    except InvalidConfig as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build(values, path, lines=None):
    lines = lines or {}
    cfg = ExperimentConfig(path=path)
    cfg.output_dir = values.get("output", {}).get("dir", cfg.output_dir)
    toy = dict(values.get("toy", {}))
    cfg.frames = toy.pop("frames", True)
    cfg.toy = toy

    hom = values.get("homography", {})
    if "h" in hom:
        if len(hom) > 1:
            raise ConfigError(f"{path}: homography.h cannot be combined with ground-plane keys")
        try:
            H = Homography(hom["h"])
        except InvalidConfig as exc:
            raise ConfigError(f"{path}:{lines.get(('homography', 'h'), '?')}: homography.h: {exc}") from exc
    else:
        H = ground_plane_homography(**hom)

    sc = dict(values.get("scenes", {}))
    cfg.train_count = sc.pop("train_count", cfg.train_count)
    cfg.val_count = sc.pop("val_count", cfg.val_count)
    cfg.scene_seed = sc.pop("seed", cfg.scene_seed)
    cfg.scene = SceneConfig(homography=H, **sc)

    tr = dict(values.get("train", {}))
    cfg.lr_end2end = tr.pop("lr_end2end", cfg.lr_end2end)
    cfg.lr_xent = tr.pop("lr_xent", cfg.lr_xent)
    tr.setdefault("epochs", 300)
    tr.setdefault("t", cfg.scene.t)
    cfg.train = TrainConfig(**tr)

    ev = values.get("eval", {})
    cfg.distractor_count = ev.get("distractor_count", cfg.distractor_count)
    cfg.distractor_seed = ev.get("distractor_seed", cfg.distractor_seed)
    cfg.radius_sigmas = ev.get("radius_sigmas", cfg.radius_sigmas)
    # surface toy range errors at load time
    cfg.toy_config()
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, path)
