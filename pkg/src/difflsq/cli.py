"""Command-line entry point.

    difflsq toy CONFIG [--mode MODE] [--out DIR]
    difflsq gen-scenes CONFIG [--out DIR]
    difflsq train CONFIG --regime end2end|xent|both [--out DIR]
    difflsq eval CONFIG [--out DIR] [--report PATH]
    difflsq check [--suite oracle|grads|losses|homography|all]

Exit codes: 0 success, 1 configuration or input errors, 2 numerical
failures (degenerate systems, divergence), 3 verification tolerances missed.
Every output file is written to a temporary name and renamed into place,
so a failed command never leaves a half-written file behind.
"""

import argparse
import csv
import io
import logging
import os
import sys
import tempfile

from . import verify
from .config import ConfigError, load_config
from .errors import DegenerateSystem, DiffLsqError, DivergedState, InvalidConfig, NearInfinityPoint
from .lanesim.generator import WeightGenerator
from .lanesim.io import index_csv, params_from_csv, params_to_csv, scene_to_bytes
from .lanesim.scene import generate_scene
from .lanesim.training import (distractor_weight_fraction, evaluate, prepare,
                               train_cross_entropy, train_end_to_end)
from .toy import MODES, render_frame_svg, run_toy

log = logging.getLogger("difflsq")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 1, 2, 3
REGIMES = ("end2end", "xent")


def write_atomic(path, data):
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8") if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _scene_splits(cfg):
    return [("train", cfg.train_seeds()), ("val", cfg.val_seeds())]


def cmd_toy(args):
    cfg = load_config(args.config)
    toy_cfg = cfg.toy_config(args.mode)
    out = cfg.resolve_output(args.out)
    traj = run_toy(toy_cfg)
    if traj.error is not None:
        log.error("toy run stopped after %d steps: %s", len(traj), traj.error)
        return EXIT_NUMERIC
    write_atomic(os.path.join(out, "trajectory.csv"), traj.to_csv())
    if cfg.frames:
        for rec in traj.records:
            write_atomic(os.path.join(out, "frames", f"step_{rec.step:04d}.svg"),
                         render_frame_svg(rec, toy_cfg.target))
    print(f"toy/{toy_cfg.mode}: {len(traj) - 1} steps, final loss {traj.losses[-1]:.3e} -> {out}")
    return EXIT_OK


def cmd_gen_scenes(args):
    cfg = load_config(args.config)
    out = cfg.resolve_output(args.out)
    rows, blobs = [], []
    for split, seeds in _scene_splits(cfg):
        for i, seed in enumerate(seeds):
            scene = generate_scene(seed, cfg.scene)
            name = f"{split}_{i:04d}.lsim"
            blobs.append((os.path.join(out, "scenes", name), scene_to_bytes(scene)))
            rows.append([len(rows), f"scenes/{name}", split, seed, repr(scene.noise),
                         int(any(scene.dashed)), len(scene.blobs)])
    for path, data in blobs:
        write_atomic(path, data)
    write_atomic(os.path.join(out, "index.csv"), index_csv(rows))
    print(f"wrote {len(rows)} scenes -> {out}")
    return EXIT_OK


def _prepared(cfg, seeds, labels):
    return [prepare(generate_scene(s, cfg.scene), labels=labels,
                    label_half_thickness=cfg.train.label_half_thickness) for s in seeds]


def cmd_train(args):
    cfg = load_config(args.config)
    out = cfg.resolve_output(args.out)
    regimes = REGIMES if args.regime == "both" else (args.regime,)
    need_labels = "xent" in regimes
    train = _prepared(cfg, cfg.train_seeds(), need_labels)
    val = _prepared(cfg, cfg.val_seeds(), False)
    outputs = {}
    for regime in regimes:
        tcfg = cfg.regime_train_config(regime)
        fn = train_end_to_end if regime == "end2end" else train_cross_entropy
        report = fn(train, val, tcfg)
        outputs[f"report_{regime}.csv"] = report.to_csv()
        outputs[f"params_{regime}.csv"] = params_to_csv(WeightGenerator(report.params))
        print(f"{regime}: final val error {report.val_error[-1]:.4e} "
              f"({report.skipped} skipped scene fits, {report.wall_clock:.1f}s)")
    for name, text in outputs.items():
        write_atomic(os.path.join(out, name), text)
    return EXIT_OK


def cmd_eval(args):
    cfg = load_config(args.config)
    out = cfg.resolve_output(args.out)
    gens = {}
    for regime in REGIMES:
        path = os.path.join(out, f"params_{regime}.csv")
        try:
            with open(path, encoding="utf-8") as fh:
                gens[regime] = params_from_csv(fh.read())
        except FileNotFoundError:
            raise InvalidConfig(f"missing trained parameters {path} (run 'train' first)")
    val = _prepared(cfg, cfg.val_seeds(), False)
    blob_scenes = [generate_scene(s, cfg.scene, distractors=True) for s in cfg.distractor_seeds()]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["regime", "mean_error", "degenerate", "distractor_fraction"])
    for regime, gen in gens.items():
        mode = "end_to_end" if regime == "end2end" else "two_step"
        res = evaluate(gen, val, mode, cfg.regime_train_config(regime))
        frac = distractor_weight_fraction(gen, blob_scenes, cfg.radius_sigmas)
        writer.writerow([regime, repr(res.mean_error), res.degenerate, repr(frac)])
        print(f"{regime}: mean area error {res.mean_error:.4e}, "
              f"{res.degenerate} degenerate, distractor weight fraction {frac:.3f}")
    report = args.report or os.path.join(out, "eval_report.csv")
    write_atomic(report, buf.getvalue())
    return EXIT_OK


def cmd_check(args):
    results = verify.run_suite(args.suite)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_TOLERANCE


def build_parser():
    parser = argparse.ArgumentParser(prog="difflsq", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy", help="run the weighted-line toy experiment")
    p.add_argument("config")
    p.add_argument("--mode", choices=MODES, help="overrides toy.mode")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("gen-scenes", help="write the synthetic scene set")
    p.add_argument("config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("train", help="train the weight generator")
    p.add_argument("config")
    p.add_argument("--regime", choices=REGIMES + ("both",), default="both")
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate trained generators on the validation scenes")
    p.add_argument("config")
    p.add_argument("--out", help="directory holding params_<regime>.csv")
    p.add_argument("--report", help="report CSV path (default OUT/eval_report.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="run the verification sweeps")
    p.add_argument("--suite", choices=tuple(verify.SUITES) + ("all",), default="all")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidConfig, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateSystem, DivergedState, NearInfinityPoint) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DiffLsqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
