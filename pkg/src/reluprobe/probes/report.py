"""Probe report containers and serialization.

A report is a flat list of measurement records (inputs, lhs, rhs with
constant 1, ratio) plus summary statistics.  Reports serialize to JSON (full
records) and CSV (one summary row per record); floats are printed with 17
significant digits so that identical runs produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import InputError
from ..linalg import loglog_slope

SAMPLED_EVIDENCE_NOTE = (
    "sampled evidence: perturbations and inputs sample the stated "
    "neighborhood; measurements do not certify uniform behavior over it"
)


def _f17(x) -> str:
    return "%.17g" % float(x)


def _json_value(v) -> str:
    import json as _json
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if not np.isfinite(v):
            raise InputError(f"cannot serialize non-finite float {v}")
        return _f17(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return _json.dumps(v)
    if v is None:
        return "null"
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, dict):
        items = sorted(v.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{_json.dumps(str(k))}: {_json_value(val)}" for k, val in items) + "}"
    raise InputError(f"cannot serialize {type(v)!r} in a probe report")


def dump_json(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    return _json_value(obj)


@dataclass
class ProbeRecord:
    """One measurement: inputs identifying it, lhs, and rhs with constant 1."""

    inputs: dict
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.lhs > 0 and self.rhs <= 0:
            raise InputError("positive lhs with nonpositive rhs has no finite ratio")
        return self.lhs / self.rhs if self.rhs > 0 else 0.0

    def to_dict(self) -> dict:
        return {"inputs": self.inputs, "lhs": float(self.lhs),
                "rhs": float(self.rhs), "ratio": float(self.ratio)}


@dataclass
class ProbeReport:
    probe_name: str
    records: list[ProbeRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)  # values + provenance strings
    header: str = SAMPLED_EVIDENCE_NOTE

    def add(self, inputs: dict, lhs: float, rhs: float) -> ProbeRecord:
        rec = ProbeRecord(inputs, float(lhs), float(rhs))
        self.records.append(rec)
        return rec

    def max_ratio(self, **filters) -> float:
        ratios = [r.ratio for r in self.select(**filters)]
        if not ratios:
            raise InputError("no matching records")
        return max(ratios)

    def select(self, **filters) -> list[ProbeRecord]:
        out = []
        for r in self.records:
            if all(r.inputs.get(k) == v for k, v in filters.items()):
                out.append(r)
        return out

    def slope(self, variable: str, value: str = "lhs", **filters) -> float:
        """Log-log slope of a record field against a swept input variable."""
        recs = self.select(**filters)
        xs = [r.inputs[variable] for r in recs]
        ys = [getattr(r, value) for r in recs]
        return loglog_slope(xs, ys)

    def to_dict(self) -> dict:
        return {
            "probe_name": self.probe_name,
            "header": self.header,
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary,
            "thresholds": self.thresholds,
        }

    def to_json(self) -> str:
        return dump_json(self.to_dict())

    def to_csv(self) -> str:
        """Summary rows: probe, item, swept variable/value, lhs, rhs, ratio."""
        lines = ["probe,item,variable,value,lhs,rhs,ratio"]
        for r in self.records:
            item = str(r.inputs.get("item", ""))
            variable = str(r.inputs.get("sweep_variable", ""))
            value = r.inputs.get(variable, "") if variable else ""
            value_str = _f17(value) if isinstance(value, (float, np.floating)) else str(value)
            lines.append(",".join([
                self.probe_name, item, variable, value_str,
                _f17(r.lhs), _f17(r.rhs), _f17(r.ratio),
            ]))
        return "\n".join(lines) + "\n"

    def save(self, json_path, csv_path=None) -> None:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")
        if csv_path is not None:
            with open(csv_path, "w", encoding="utf-8") as fh:
                fh.write(self.to_csv())
