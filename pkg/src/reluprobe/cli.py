"""Batch experiment front end: gen / train / probe / sweep.

Every command is driven by one flat config file and is deterministic given
that file: all randomness is seeded from config values, BLAS threading is
pinned to the configured count, and no wall-clock data reaches the
artifacts.  Run manifests embed the resolved config text, so a manifest
can be passed anywhere a config is expected and reproduces its run
byte-for-byte.

Exit codes: 0 success, 2 usage/config errors, 3 numeric divergence,
4 infeasible generation/certification.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bounds import bartlett_bound, main_bound, neyshabur_bound
from .configio import SCHEMAS, apply_schema, format_config, parse_text
from .data import GeneratorSpec, LabeledSet, generate, load_dataset, provenance_hash, save_dataset
from .exceptions import (ConfigError, DivergedError, InfeasibleError,
                         InputError, NumericError, ReluprobeError)
from .kernels import random_feature_margin
from .linalg import loglog_slope
from .network import NetworkConfig, he_init, load_weights, save_weights, weight_distances
from .probes import (PROBE_NAMES, gmatrix_probe, grad_lower_probe,
                     grad_upper_probe, hidden_separability_probe,
                     init_output_probe, scaling_probe, semismoothness_sweep)
from .probes.scaling import make_tau_sweep
from .runio import (TRAJECTORY_HEADER_NOTE, read_config_or_manifest,
                    resolve_out_dir, trajectory_csv, write_manifest)
from .training import TrainingConfig, evaluate, gd_train, loss_derivative
from .network import _forward_arrays

_F17 = "%.17g"


def _fmt(x) -> str:
    if isinstance(x, float):
        return _F17 % x
    return str(x)


def _load_config(path: str, command: str, seed_override: int | None) -> tuple[dict, str]:
    """Typed config plus its canonical resolved text (defaults explicit)."""
    raw = parse_text(read_config_or_manifest(path))
    if seed_override is not None and "seed" in SCHEMAS[command]:
        raw["seed"] = str(seed_override)
    cfg = apply_schema(raw, SCHEMAS[command])
    return cfg, format_config(cfg)


def _cmd_gen(args) -> int:
    cfg, text = _load_config(args.config, "gen", args.seed_override)
    out = resolve_out_dir(args.out, "gen", args.config)
    out.mkdir(parents=True, exist_ok=True)
    total = cfg["n"] + cfg["test_n"]
    spec = GeneratorSpec(kind=cfg["kind"], n=total, dim=cfg["dim"], seed=cfg["seed"],
                         margin=cfg["margin"], separation=cfg["separation"],
                         teacher_features=cfg["teacher_features"])
    full = generate(spec)
    name = cfg["name"]
    files = {}
    if cfg["test_n"] > 0:
        # disjoint by construction: first n accepted samples train, rest test
        idx = np.arange(total)
        train = LabeledSet(full.dataset.subset(idx[:cfg["n"]]), spec,
                           full.achieved_margin, full.teacher_hash)
        test = LabeledSet(full.dataset.subset(idx[cfg["n"]:]), spec,
                          full.achieved_margin, full.teacher_hash)
        save_dataset(train, out / f"{name}.train.csv")
        save_dataset(test, out / f"{name}.test.csv")
        files = {f"{name}.train.csv": provenance_hash(train.dataset),
                 f"{name}.test.csv": provenance_hash(test.dataset)}
    else:
        save_dataset(full, out / f"{name}.csv")
        files = {f"{name}.csv": provenance_hash(full.dataset)}
    write_manifest(out / "gen_manifest.json", "gen", text, {
        "files": files,
        "achieved_margin": full.achieved_margin,
    })
    print(f"wrote {len(files)} dataset file(s) to {out}")
    return 0


def _train_once(cfg: dict, text: str, out: Path) -> dict:
    """Shared by the train command and sweep cells; returns the manifest payload."""
    train_set = load_dataset(cfg["dataset"])
    test_set = load_dataset(cfg["test_dataset"]) if cfg.get("test_dataset") else None
    net_config = NetworkConfig(input_dim=train_set.dataset.dim,
                               widths=(cfg["width"],) * cfg["depth"],
                               master_seed=cfg["seed"])
    w0 = he_init(net_config)
    tcfg = TrainingConfig(step_size=cfg["step_size"], iterations=cfg["iterations"],
                          record_every=cfg["record_every"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = gd_train(w0, train_set.dataset, tcfg)
    except DivergedError as exc:
        if exc.trajectory is not None and exc.trajectory.iterations:
            (out / "trajectory.csv").write_text(trajectory_csv(exc.trajectory))
        write_manifest(out / "manifest.json", "train", text, {
            "status": "diverged",
            "last_finite_iteration": exc.last_finite_iteration,
            "dataset_hash": provenance_hash(train_set.dataset),
        })
        raise

    (out / "trajectory.csv").write_text(trajectory_csv(result.trajectory))
    save_weights(out / "weights_init.npz", result.weights_init, net_config)
    save_weights(out / "weights_best.npz", result.weights_best, net_config)
    save_weights(out / "weights_final.npz", result.weights_final, net_config)

    dists = weight_distances(result.weights_best, result.weights_init)
    rel = dists / np.array([np.linalg.norm(W) for W in result.weights_init.layers])
    metrics = {
        "best_k": result.best_k,
        "surrogate_at_best": float(result.surrogate_per_iteration[result.best_k]),
        "final_loss": result.trajectory.loss_values[-1],
        "final_train_error": result.trajectory.train_errors[-1],
        "max_distance_at_best": float(np.max(dists)),
        "max_relative_distance_at_best": float(np.max(rel)),
    }
    if test_set is not None:
        err, sur = evaluate(result.weights_best, test_set.dataset)
        metrics["test_error_at_best"] = err
        metrics["test_surrogate_at_best"] = sur
    payload = {
        "status": "ok",
        "dataset_hash": provenance_hash(train_set.dataset),
        "achieved_margin": train_set.achieved_margin,
        "network": net_config.to_dict(),
        "trajectory_columns": TRAJECTORY_HEADER_NOTE,
        "metrics": metrics,
    }
    if test_set is not None:
        payload["test_dataset_hash"] = provenance_hash(test_set.dataset)
    write_manifest(out / "manifest.json", "train", text, payload)
    return payload


def _cmd_train(args) -> int:
    cfg, text = _load_config(args.config, "train", args.seed_override)
    out = resolve_out_dir(args.out, "train", args.config)
    with threadpool_limits(limits=cfg["blas_threads"]):
        payload = _train_once(cfg, text, out)
    k = payload["metrics"]["best_k"]
    print(f"run complete: best iterate k*={k}, "
          f"surrogate {_fmt(payload['metrics']['surrogate_at_best'])}, wrote {out}")
    return 0


def _resolve_gamma(cfg: dict, train_set) -> tuple[float, str]:
    if cfg["gamma"] is not None:
        if cfg["gamma"] <= 0:
            raise ConfigError("field 'gamma': must be positive")
        return cfg["gamma"], "config"
    if train_set.achieved_margin and train_set.achieved_margin > 0 and \
            train_set.spec.kind != "separated-arbitrary-labels":
        return float(train_set.achieved_margin), "generator-ground-truth"
    cert = random_feature_margin(train_set.dataset, cfg["rf_features"], seed=cfg["rf_seed"])
    if cert.gamma <= 0:
        raise InfeasibleError("no positive margin could be certified for this dataset; "
                              "pass gamma explicitly")
    return cert.gamma, "random-feature-LP"


def _cmd_probe(args) -> int:
    run_dir = Path(args.run)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise InputError(f"{run_dir} is not a run directory (no manifest.json)")
    train_cfg = apply_schema(parse_text(read_config_or_manifest(manifest_path)),
                             SCHEMAS["train"])
    if args.config is not None:
        cfg, text = _load_config(args.config, "probe", args.seed_override)
    else:
        cfg = apply_schema({"config_version": "1"}, SCHEMAS["probe"])
        text = format_config(cfg)

    requested = PROBE_NAMES if args.probes == "all" else tuple(
        p.strip() for p in args.probes.split(",") if p.strip())
    unknown = [p for p in requested if p not in PROBE_NAMES]
    if unknown:
        raise ConfigError(f"unknown probe name(s) {', '.join(unknown)}; "
                          f"valid names: {', '.join(PROBE_NAMES)}")

    train_set = load_dataset(train_cfg["dataset"])
    w0, _ = load_weights(run_dir / "weights_init.npz")
    w_best, _ = load_weights(run_dir / "weights_best.npz")
    probes_dir = run_dir / "probes"
    probes_dir.mkdir(exist_ok=True)

    with threadpool_limits(limits=cfg["blas_threads"]):
        gamma, gamma_source = (None, None)
        if any(p in requested for p in ("grad-lower", "hidden-separability", "gmatrix")):
            gamma, gamma_source = _resolve_gamma(cfg, train_set)
        written = {}
        for name in requested:
            if name == "scaling":
                report = scaling_probe(
                    w0, make_tau_sweep(cfg["taus"], mode=cfg["perturb_mode"],
                                       seed=cfg["perturb_seed"]),
                    train_set.dataset, operator_norm_samples=cfg["operator_samples"])
            elif name == "semismoothness":
                report = semismoothness_sweep(w0, train_set.dataset, cfg["taus"],
                                              mode=cfg["perturb_mode"],
                                              seed=cfg["perturb_seed"])
            elif name == "grad-upper":
                report = grad_upper_probe(w_best, train_set.dataset)
            elif name == "grad-lower":
                report = grad_lower_probe(w_best, w0, train_set.dataset, gamma)
            elif name == "init-output":
                report = init_output_probe(w0, train_set.dataset)
            elif name == "hidden-separability":
                report = hidden_separability_probe(
                    w0, train_set.dataset, gamma,
                    iterations=cfg["solver_iterations"], restarts=cfg["solver_restarts"])
            elif name == "gmatrix":
                _, _, f = _forward_arrays(w_best, train_set.dataset.inputs)
                a = -loss_derivative(train_set.dataset.labels * f)
                report = gmatrix_probe(w0, train_set.dataset, a, gamma)
            if gamma_source is not None:
                report.thresholds.setdefault("gamma_source", gamma_source)
            report.save(probes_dir / f"{name}.json", probes_dir / f"{name}.csv")
            written[name] = f"probes/{name}.json"
        write_manifest(run_dir / "probes_manifest.json", "probe", text, {
            "run": str(run_dir), "probes": dict(sorted(written.items())),
            "gamma": gamma, "gamma_source": gamma_source,
        })
    print(f"wrote {len(written)} probe report(s) to {probes_dir}")
    return 0


def _sweep_cell(payload) -> dict:
    """One grid cell: a full training run plus bound evaluations.

    Top-level function so process pools can pickle it; must stay pure in
    its payload for worker-count independence.
    """
    cfg, text, out_dir, width = payload
    cell_cfg = dict(cfg)
    cell_cfg["width"] = width
    cell_cfg["step_size"] = cfg["step_size_scale"] / width
    for key in ("width_grid", "step_size_scale"):
        cell_cfg.pop(key)
    cell_text = format_config({**{k: v for k, v in cell_cfg.items() if v is not None}})
    out = Path(out_dir) / "cells" / f"m{width}"
    try:
        with threadpool_limits(limits=cfg["blas_threads"]):
            result = _train_once(cell_cfg, cell_text, out)
            train_set = load_dataset(cell_cfg["dataset"])
            w0, _ = load_weights(out / "weights_init.npz")
            w_best, _ = load_weights(out / "weights_best.npz")
            main = main_bound(w_best, w0, train_set.dataset)
            bart = bartlett_bound(w_best, w0, train_set.dataset)
            ney = neyshabur_bound(w_best, w0, train_set.dataset)
        row = {
            "m": width,
            "n": train_set.dataset.n,
            "L": cell_cfg["depth"],
            "status": "ok",
            "step_size": cell_cfg["step_size"],
            "best_k": result["metrics"]["best_k"],
            "surrogate_at_best": result["metrics"]["surrogate_at_best"],
            "tau": main.inputs["tau"],
            "sqrt_m_tau": float(np.sqrt(width) * main.inputs["tau"]),
            "main_twice_surrogate": main.terms["twice_surrogate"],
            "main_sample_term": main.terms["sample_term"],
            "main_perturbation_term": main.terms["perturbation_term"],
            "main_total": main.total,
            "main_gap": main.terms["sample_term"] + main.terms["perturbation_term"],
            "bartlett_spectral_product": bart.terms["spectral_product"],
            "bartlett_bracket": bart.terms["group_norm_bracket"],
            "bartlett_total": bart.total,
            "neyshabur_bracket": ney.terms["frobenius_bracket"],
            "neyshabur_total": ney.total,
        }
        if "test_error_at_best" in result["metrics"]:
            row["test_error_at_best"] = result["metrics"]["test_error_at_best"]
        return row
    except ReluprobeError as exc:
        # status stays comma-free for the CSV; the manifest keeps the detail
        return {"m": width, "status": f"failed:{type(exc).__name__}",
                "error": str(exc)}


def _cmd_sweep(args) -> int:
    cfg, text = _load_config(args.config, "sweep", args.seed_override)
    if not cfg["width_grid"]:
        raise ConfigError("field 'width_grid': sweep grid must be nonempty")
    out = resolve_out_dir(args.out, "sweep", args.config)
    out.mkdir(parents=True, exist_ok=True)
    payloads = [(cfg, text, str(out), m) for m in cfg["width_grid"]]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_cell, payloads))
    else:
        rows = [_sweep_cell(p) for p in payloads]
    rows.sort(key=lambda r: r["m"])  # aggregation order independent of workers

    columns = ["m", "n", "L", "status", "step_size", "best_k",
               "surrogate_at_best", "tau", "sqrt_m_tau", "main_twice_surrogate",
               "main_sample_term", "main_perturbation_term", "main_total",
               "main_gap", "bartlett_spectral_product", "bartlett_bracket",
               "bartlett_total", "neyshabur_bracket", "neyshabur_total",
               "test_error_at_best"]
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) if c in row else "" for c in columns))
    (out / "sweep_summary.csv").write_text("\n".join(lines) + "\n")

    ok = [r for r in rows if r["status"] == "ok"]
    slopes = {}
    if len(ok) >= 3:
        ms = [r["m"] for r in ok]
        if all(r["tau"] > 0 for r in ok):
            slopes["tau_vs_m"] = loglog_slope(ms, [r["tau"] for r in ok])
            slopes["neyshabur_over_main_gap_vs_m"] = loglog_slope(
                ms, [r["neyshabur_total"] / r["main_gap"] for r in ok])
    write_manifest(out / "sweep_manifest.json", "sweep", text, {
        "rows": rows, "slopes": slopes,
        "workers_note": "cells are pure functions of the config; aggregation "
                        "is sorted by grid key, so outputs do not depend on "
                        "the worker count",
    })
    print(f"swept {len(rows)} cell(s) ({len(ok)} ok) into {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reluprobe",
        description="Reproducible experiments on over-parameterized deep ReLU "
                    "networks: data generation, GD training, theory probes, "
                    "and width sweeps.",
        epilog="Default output root: $RELUPROBE_OUT (falls back to ./runs). "
               "A run manifest can be passed wherever a config is expected.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="flat key=value config file (or a run manifest)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the config's seed field")

    p_gen = sub.add_parser("gen", help="generate datasets with provenance")
    common(p_gen)
    p_train = sub.add_parser("train", help="run gradient descent, write run directory")
    common(p_train)
    p_probe = sub.add_parser("probe", help="run measurement probes on a run directory")
    p_probe.add_argument("--run", required=True, help="run directory from 'train'")
    p_probe.add_argument("--probes", default="all",
                         help=f"comma list or 'all'; valid: {', '.join(PROBE_NAMES)}")
    p_probe.add_argument("--config", default=None, help="optional probe config file")
    p_probe.add_argument("--out", default=None, help=argparse.SUPPRESS)
    p_probe.add_argument("--seed-override", type=int, default=None)
    p_sweep = sub.add_parser("sweep", help="width-grid sweep with aggregated slopes")
    common(p_sweep)
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel sweep cells (results are worker-count independent)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "probe":
            return _cmd_probe(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergedError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(f"diagnostics: {exc.diagnostics}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
