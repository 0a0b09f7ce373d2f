"""Measurement probes for the near-initialization behavior of deep ReLU
networks.

Each probe evaluates a measured left-hand quantity against the claimed
functional form of its bound with the leading constant set to 1, and
reports ratios and (for sweeps) log-log slopes.  Probes never emit
pass/fail against unknown absolute constants; acceptance bands are
calibrated once on reference fixtures and asserted by the test suite.
"""

from .report import ProbeRecord, ProbeReport, SAMPLED_EVIDENCE_NOTE
from .perturb import PerturbationSpec, perturb_weights
from .scaling import scaling_probe
from .semismooth import (pattern_preserving_single_layer, semismoothness_probe,
                         semismoothness_sweep)
from .gradbounds import grad_lower_probe, grad_upper_probe, init_output_probe
from .separability import hidden_separability_probe, max_min_margin
from .gmatrix import gmatrix_probe

PROBE_NAMES = (
    "scaling",
    "semismoothness",
    "grad-upper",
    "grad-lower",
    "init-output",
    "hidden-separability",
    "gmatrix",
)

__all__ = [
    "ProbeRecord", "ProbeReport", "SAMPLED_EVIDENCE_NOTE",
    "PerturbationSpec", "perturb_weights",
    "scaling_probe", "semismoothness_probe", "semismoothness_sweep",
    "pattern_preserving_single_layer",
    "grad_upper_probe", "grad_lower_probe", "init_output_probe",
    "hidden_separability_probe", "max_min_margin", "gmatrix_probe",
    "PROBE_NAMES",
]
