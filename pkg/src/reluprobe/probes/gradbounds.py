"""Gradient norm probes: upper bound, lower bound, and init output size.

Upper: per-sample output-gradient norms against sqrt(m) and the loss
gradient against sqrt(m) * E_S (the loss gradient is a surrogate-weighted
average of rank-one matrices, so the triangle inequality version holds
exactly and sweep fixtures check that the ratio does not grow with width).

Lower: the measured last-layer ratio B_hat = ||grad_L L_S|| / (sqrt(m) E_S)
against the two claimed floors gamma * 2^{-L} (random-feature separability)
and gamma (kernel separability), plus the init-pattern surrogate matrix

    Gbar = (1/n) sum_i l'(y_i f_i) y_i x^{(0)}_{L-1,i} (v . pattern_L^{(0)}(x_i))^T

whose Frobenius norm is the quantity the lower-bound argument actually
controls (current surrogate weights, activation geometry frozen at init).
"""

from __future__ import annotations

import numpy as np

from ..exceptions import InputError
from ..network import Weights, _forward_arrays, output_gradient_norms
from ..training import Dataset, loss_derivative, loss_gradient, surrogate_error
from .report import ProbeReport


def grad_upper_probe(w: Weights, data: Dataset) -> ProbeReport:
    """Per-layer gradient norms normalized by their claimed scales."""
    m, L = min(w.widths), w.depth
    report = ProbeReport("grad-upper")
    es = surrogate_error(w, data)
    per_sample = output_gradient_norms(w, data)  # (n, L)
    grads = loss_gradient(w, data)
    sqrt_m = float(np.sqrt(m))
    for l in range(1, L + 1):
        report.add({"item": "output-gradient", "layer": l, "aggregate": "max",
                    "m": m, "sweep_variable": "m"},
                   float(np.max(per_sample[:, l - 1])), sqrt_m)
        report.add({"item": "loss-gradient", "layer": l, "m": m,
                    "sweep_variable": "m"},
                   float(np.linalg.norm(grads[l - 1])), sqrt_m * es)
    report.summary = {
        "n": data.n, "m": m, "L": L, "surrogate_error": es,
        "max_ratio_output": report.max_ratio(item="output-gradient"),
        "max_ratio_loss": report.max_ratio(item="loss-gradient"),
    }
    return report


def init_pattern_surrogate_norm(w: Weights, w0: Weights, data: Dataset) -> float:
    """||Gbar||_F: last-layer loss-gradient surrogate with init geometry.

    Column j of Gbar is (1/n) sum_i l'(y_i f_i) y_i sigma'(w_{L,j}^{(0)T}
    x^{(0)}_{L-1,i}) x^{(0)}_{L-1,i} times the fixed output sign, which has
    unit magnitude, so the Frobenius norm equals that of the column stack.
    """
    acts0, pats0, _ = _forward_arrays(w0, data.inputs)
    _, _, f = _forward_arrays(w, data.inputs)
    coef = loss_derivative(data.labels * f) * data.labels / data.n
    M = (acts0[-2] * coef[:, None]).T @ pats0[-1]  # (m_{L-1}, m_L) column stack
    return float(np.linalg.norm(M))


def grad_lower_probe(w: Weights, w0: Weights, data: Dataset,
                     gamma: float) -> ProbeReport:
    """Measured last-layer gradient ratio against its certified floors.

    ``gamma`` must come from a margin certifier or generator ground truth.
    Records: B_hat against gamma 2^{-L} and against gamma, and the init-
    pattern surrogate ratio against gamma 2^{-L} / (2 sqrt(2)).
    """
    if gamma <= 0:
        raise InputError("gamma must be positive (take it from a margin certificate)")
    m, L = min(w.widths), w.depth
    es = surrogate_error(w, data)
    grads = loss_gradient(w, data)
    b_hat = float(np.linalg.norm(grads[-1]) / (np.sqrt(m) * es))
    gbar_ratio = init_pattern_surrogate_norm(w, w0, data) / (np.sqrt(m) * es)

    report = ProbeReport("grad-lower")
    report.add({"item": "measured-vs-random-feature-floor", "layer": L, "m": m},
               b_hat, gamma * 2.0 ** (-L))
    report.add({"item": "measured-vs-kernel-floor", "layer": L, "m": m},
               b_hat, gamma)
    report.add({"item": "init-pattern-surrogate", "layer": L, "m": m},
               float(gbar_ratio), gamma * 2.0 ** (-L) / (2.0 * np.sqrt(2.0)))
    report.summary = {
        "n": data.n, "m": m, "L": L, "gamma": gamma,
        "surrogate_error": es, "b_hat": b_hat,
        "init_pattern_surrogate_ratio": float(gbar_ratio),
    }
    return report


def init_output_probe(w0: Weights, data: Dataset) -> ProbeReport:
    """max_i |f(x_i)| at init and its ratio to sqrt(log n).

    For n = 1 the denominator degenerates; only the raw maximum is
    reported in that case.
    """
    _, _, f = _forward_arrays(w0, data.inputs)
    max_abs = float(np.max(np.abs(f)))
    report = ProbeReport("init-output")
    if data.n > 1:
        report.add({"item": "max-output", "n": data.n, "sweep_variable": "n"},
                   max_abs, float(np.sqrt(np.log(data.n))))
    else:
        report.add({"item": "max-output-raw", "n": 1}, max_abs, 1.0)
    report.summary = {"n": data.n, "max_abs_output": max_abs}
    return report
