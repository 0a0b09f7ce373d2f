"""Run directories: trajectory CSV, manifests, weight snapshots.

All floats serialize with 17 significant digits, JSON keys are sorted, and
nothing wall-clock-dependent is written, so a rerun of the same resolved
config produces byte-identical artifacts.  The manifest embeds the fully
resolved flat config text; the CLI accepts a manifest anywhere a config is
expected, which makes every run reproducible from its manifest alone.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import __version__ as _pkg_version
from .exceptions import InputError
from .probes.report import dump_json
from .training import TrajectoryRecord

TRAJECTORY_HEADER_NOTE = (
    "columns: iteration k; empirical loss; surrogate error; training "
    "classification error; per-layer Frobenius distance from init; "
    "per-layer loss-gradient Frobenius norm"
)


def _f17(x) -> str:
    return "%.17g" % float(x)


def trajectory_csv(traj: TrajectoryRecord) -> str:
    cols = ["iteration", "loss", "surrogate_error", "train_error"]
    cols += [f"dist_layer{l}" for l in range(1, traj.n_layers + 1)]
    cols += [f"gradnorm_layer{l}" for l in range(1, traj.n_layers + 1)]
    lines = [",".join(cols)]
    for j, k in enumerate(traj.iterations):
        row = [str(k), _f17(traj.loss_values[j]), _f17(traj.surrogate_values[j]),
               _f17(traj.train_errors[j])]
        row += [_f17(d) for d in traj.distances[j]]
        row += [_f17(g) for g in traj.grad_norms[j]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_manifest(path, command: str, config_text: str, payload: dict) -> None:
    manifest = {
        "manifest_version": 1,
        "package_version": _pkg_version,
        "command": command,
        "config_text": config_text,
        **payload,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(manifest) + "\n")


def read_config_or_manifest(path) -> str:
    """The flat config text, from either a config file or a manifest."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        manifest = json.loads(text)
        if "config_text" not in manifest:
            raise InputError(f"{path}: JSON file is not a run manifest")
        return manifest["config_text"]
    return text


def default_output_root() -> Path:
    return Path(os.environ.get("RELUPROBE_OUT", "runs"))


def resolve_out_dir(out_arg, command: str, config_path) -> Path:
    if out_arg is not None:
        return Path(out_arg)
    stem = Path(config_path).stem
    return default_output_root() / f"{stem}.{command}"
