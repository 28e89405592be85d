import csv
import os

import pytest

from difflsq.cli import main, write_atomic

from .helpers import config_path, run_cli, tree_bytes

QUICK = config_path("quick.ini")


def _write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_toy_writes_trajectory_and_frames(tmp_path):
    out = tmp_path / "toy"
    assert main(["toy", config_path("toy_weights.ini"), "--out", str(out)]) == 0
    rows = (out / "trajectory.csv").read_text().splitlines()
    assert len(rows) == 1 + 201
    frames = sorted(os.listdir(out / "frames"))
    assert frames[0] == "step_0000.svg" and frames[-1] == "step_0200.svg"


def test_toy_mode_override(tmp_path):
    out = tmp_path / "toy"
    assert main(["toy", QUICK, "--mode", "coords", "--out", str(out)]) == 0
    assert len((out / "trajectory.csv").read_text().splitlines()) == 1 + 21
    assert not (out / "frames").exists()


def test_missing_config_exits_1(tmp_path, capsys):
    assert main(["toy", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_negative_lr_exits_1_naming_key(tmp_path, capsys):
    cfg = _write(tmp_path, "[toy]\nmode = weights\nlr = -0.5\n")
    assert main(["toy", cfg, "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "toy.lr" in err and "exp.ini:3" in err
    assert not (tmp_path / "o").exists()


def test_divergent_toy_run_exits_2(tmp_path, monkeypatch):
    from difflsq import cli, DegenerateSystem
    from difflsq.toy import Trajectory

    monkeypatch.setattr(cli, "run_toy", lambda cfg: Trajectory([], error=DegenerateSystem("x")))
    out = tmp_path / "o"
    assert main(["toy", QUICK, "--out", str(out)]) == 2
    assert not out.exists()


def test_train_skips_degenerate_scenes(tmp_path):
    cfg = _write(tmp_path, "[scenes]\nheight = 16\nwidth = 16\ntrain_count = 2\nval_count = 1\n"
                 "[train]\ninit_scale = 0\ninit_bias = 0\nepochs = 1\n")
    # zero generator: every fit is degenerate, so every scene is skipped and errors are capped
    out = tmp_path / "o"
    assert main(["train", cfg, "--regime", "end2end", "--out", str(out)]) == 0
    assert (out / "report_end2end.csv").read_text().splitlines()[1] == "0,nan,1.0"


def test_train_divergence_exits_2(tmp_path):
    cfg = _write(tmp_path, "[scenes]\nheight = 16\nwidth = 16\ntrain_count = 2\nval_count = 1\n"
                 "[train]\nepochs = 3\nlr_xent = 1e308\n")
    out = tmp_path / "o"
    # end2end trains fine, xent overflows: nothing may be written
    assert main(["train", cfg, "--regime", "both", "--out", str(out)]) == 2
    assert not out.exists()


def test_check_grads_exits_0(capsys):
    assert main(["check", "--suite", "grads"]) == 0
    assert "[PASS]" in capsys.readouterr().out


def test_check_failure_exits_3(monkeypatch):
    from difflsq import verify
    failing = verify.SweepResult("fake", 1, 1.0, 1e-9, 0.0, False)
    monkeypatch.setitem(verify.SUITES, "oracle", lambda: [failing])
    assert main(["check", "--suite", "oracle"]) == 3


def test_gen_scenes_writes_index(tmp_path):
    out = tmp_path / "b"
    assert main(["gen-scenes", QUICK, "--out", str(out)]) == 0
    with open(out / "index.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12
    assert [r["split"] for r in rows].count("val") == 4
    assert all((out / r["file"]).exists() for r in rows)


def test_train_then_eval(tmp_path):
    out = tmp_path / "b"
    assert main(["train", QUICK, "--regime", "both", "--out", str(out)]) == 0
    for name in ("report_end2end.csv", "report_xent.csv", "params_end2end.csv",
                 "params_xent.csv"):
        assert (out / name).exists()
    report = tmp_path / "r.csv"
    assert main(["eval", QUICK, "--out", str(out), "--report", str(report)]) == 0
    with open(report) as fh:
        rows = {r["regime"]: r for r in csv.DictReader(fh)}
    assert set(rows) == {"end2end", "xent"}
    assert 0.0 <= float(rows["end2end"]["distractor_fraction"]) <= 1.0


def test_eval_without_params_exits_1(tmp_path, capsys):
    assert main(["eval", QUICK, "--out", str(tmp_path / "empty")]) == 1
    assert "params_end2end.csv" in capsys.readouterr().err


def test_output_root_env(tmp_path):
    env = dict(os.environ, DIFFLSQ_OUTPUT_ROOT=str(tmp_path))
    res = run_cli("toy", QUICK, env=env)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "runs" / "quick" / "trajectory.csv").exists()


def test_console_entry_point_runs():
    res = run_cli("--help")
    assert res.returncode == 0
    assert "gen-scenes" in res.stdout


def test_write_atomic_leaves_no_temp_files(tmp_path):
    write_atomic(str(tmp_path / "a" / "f.txt"), "hello")
    write_atomic(str(tmp_path / "a" / "g.bin"), b"\x00\x01")
    assert sorted(tree_bytes(tmp_path / "a")) == ["f.txt", "g.bin"]


@pytest.mark.parametrize("args", [
    ("gen-scenes", QUICK),
    ("train", QUICK, "--regime", "both"),
    ("toy", QUICK),
])
def test_commands_are_byte_identical(tmp_path, args):
    trees = []
    for run in ("one", "two"):
        out = tmp_path / run
        assert main([*args, "--out", str(out)]) == 0
        trees.append(tree_bytes(out))
    assert trees[0] == trees[1]
    assert trees[0]
