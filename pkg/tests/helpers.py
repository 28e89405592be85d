import os
import subprocess
import sys

import difflsq

CONFIG_DIR = os.path.join(os.path.dirname(difflsq.__file__), "configs")


def config_path(name):
    return os.path.join(CONFIG_DIR, name)


def run_cli(*args, env=None):
    """Run the CLI in a fresh interpreter; returns the CompletedProcess."""
    return subprocess.run([sys.executable, "-m", "difflsq.cli", *args],
                          capture_output=True, text=True, env=env)


def tree_bytes(root):
    """Map of relative path -> file bytes for everything under ``root``."""
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = fh.read()
    return out
