"""Flat, typed key-value config files (documented schema, versioned).

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Values are typed per the command schema; list values are comma-separated.
Every file must carry ``config_version = 1``.  Unknown keys and malformed
values raise ConfigError naming the field (the CLI maps that to exit 2).
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ConfigError

CONFIG_VERSION = 1


@dataclass(frozen=True)
class Field:
    type: str  # int | float | bool | str | ints | floats | strs
    required: bool = False
    default: object = None
    choices: tuple | None = None


def _convert(name: str, raw: str, ftype: str):
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype == "bool":
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if ftype == "str":
            return raw
        if ftype == "ints":
            return tuple(int(p.strip()) for p in raw.split(",") if p.strip())
        if ftype == "floats":
            return tuple(float(p.strip()) for p in raw.split(",") if p.strip())
        if ftype == "strs":
            return tuple(p.strip() for p in raw.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"field {name!r}: cannot parse {raw!r} as {ftype}") from exc
    raise ConfigError(f"field {name!r}: unknown type {ftype!r}")


def parse_text(text: str) -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = stripped.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def apply_schema(raw: dict[str, str], schema: dict[str, Field]) -> dict:
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    out = {}
    for name, spec in schema.items():
        if name in raw:
            value = _convert(name, raw[name], spec.type)
        elif spec.required:
            raise ConfigError(f"field {name!r} is required")
        else:
            value = spec.default
        if spec.choices is not None and value is not None and value not in spec.choices:
            raise ConfigError(
                f"field {name!r}: invalid value {value!r}; valid values: {spec.choices}")
        out[name] = value
    if out.get("config_version") != CONFIG_VERSION:
        raise ConfigError(f"field 'config_version' must be {CONFIG_VERSION}")
    return out


def format_config(values: dict) -> str:
    """Canonical flat-file form of a typed config (sorted keys)."""
    lines = []
    for key in sorted(values):
        v = values[key]
        if v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = "%.17g" % v
        elif isinstance(v, tuple):
            v = ",".join("%.17g" % x if isinstance(x, float) else str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


_VERSION_FIELD = {"config_version": Field("int", required=True)}

GEN_SCHEMA = {
    **_VERSION_FIELD,
    "kind": Field("str", required=True,
                  choices=("linear-margin", "random-relu-teacher",
                           "separated-arbitrary-labels")),
    "n": Field("int", required=True),
    "test_n": Field("int", default=0),
    "dim": Field("int", required=True),
    "seed": Field("int", default=0),
    "margin": Field("float"),
    "separation": Field("float"),
    "teacher_features": Field("int"),
    "name": Field("str", default="data"),
}

TRAIN_SCHEMA = {
    **_VERSION_FIELD,
    "dataset": Field("str", required=True),
    "test_dataset": Field("str"),
    "depth": Field("int", required=True),
    "width": Field("int", required=True),
    "seed": Field("int", default=0),
    "step_size": Field("float", required=True),
    "iterations": Field("int", required=True),
    "record_every": Field("int", default=1),
    "blas_threads": Field("int", default=1),
}

PROBE_SCHEMA = {
    **_VERSION_FIELD,
    "taus": Field("floats", default=(1e-3, 3e-3, 1e-2, 3e-2, 1e-1)),
    "perturb_mode": Field("str", default="gaussian", choices=("gaussian", "gradient")),
    "perturb_seed": Field("int", default=0),
    "gamma": Field("float"),
    "rf_features": Field("int", default=400),
    "rf_seed": Field("int", default=0),
    "operator_samples": Field("int", default=8),
    "solver_iterations": Field("int", default=5000),
    "solver_restarts": Field("int", default=10),
    "blas_threads": Field("int", default=1),
}

SWEEP_SCHEMA = {
    **_VERSION_FIELD,
    "dataset": Field("str", required=True),
    "test_dataset": Field("str"),
    "depth": Field("int", required=True),
    "width_grid": Field("ints", required=True),
    "seed": Field("int", default=0),
    "step_size_scale": Field("float", required=True),  # eta(m) = scale / m
    "iterations": Field("int", required=True),
    "record_every": Field("int", default=1),
    "blas_threads": Field("int", default=1),
}

SCHEMAS = {"gen": GEN_SCHEMA, "train": TRAIN_SCHEMA, "probe": PROBE_SCHEMA,
           "sweep": SWEEP_SCHEMA}
