"""Linear separability of hidden-layer outputs at initialization.

For data separable with margin gamma by the random-ReLU-feature class, the
hidden outputs at init are claimed to stay linearly separable with margin
at least 2^{-(l+1)} gamma at layer l.  The probe searches for the best
unit separator per layer with a projected subgradient ascent on the
max-min margin (concave, piecewise linear) and reports achieved margins
against the claimed floors.  Layer 0 is the raw-input passthrough check.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import InputError
from ..network import Weights, _forward_arrays
from ..rng import stream
from ..training import Dataset
from .report import ProbeReport

SOLVER_ITERATIONS = 5000
SOLVER_RESTARTS = 10


def max_min_margin(features: np.ndarray, labels: np.ndarray, iterations: int = SOLVER_ITERATIONS,
                   restarts: int = SOLVER_RESTARTS, seed: int = 0,
                   stall_tolerance: float = 1e-6):
    """Maximize min_i y_i <alpha, z_i> over the unit ball.

    Projected subgradient ascent: step along y_i* z_i* for the currently
    worst sample, renormalize to the sphere, keep the best margin seen.
    Returns (alpha, margin, converged); ``converged`` is False when the
    best margin still improved during the last fifth of the iterations
    (the best feasible margin is returned regardless).
    """
    Z = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n, dim = Z.shape
    if y.shape != (n,):
        raise InputError("labels do not match features")
    signed = Z * y[:, None]
    scale = float(np.mean(np.linalg.norm(Z, axis=1))) or 1.0

    best_alpha, best_margin = None, -np.inf
    converged = True
    tail_start = iterations - max(iterations // 5, 1)
    for restart in range(restarts):
        gen = stream(seed, "margin-solver", restart)
        alpha = gen.standard_normal(dim)
        alpha /= np.linalg.norm(alpha)
        best_local, best_alpha_local = -np.inf, alpha.copy()
        margin_at_tail = -np.inf
        for k in range(iterations):
            margins = signed @ alpha
            i_star = int(np.argmin(margins))
            value = float(margins[i_star])
            if value > best_local:
                best_local, best_alpha_local = value, alpha.copy()
            if k == tail_start:
                margin_at_tail = best_local
            step = scale / np.sqrt(k + 1.0)
            alpha = alpha + step * signed[i_star] / (np.linalg.norm(signed[i_star]) or 1.0)
            norm = np.linalg.norm(alpha)
            if norm > 0:
                alpha /= norm
        final = float(np.min(signed @ alpha))
        if final > best_local:
            best_local, best_alpha_local = final, alpha.copy()
        if best_local - margin_at_tail > stall_tolerance * max(abs(best_local), 1.0):
            converged = False
        if best_local > best_margin:
            best_margin, best_alpha = best_local, best_alpha_local
    return best_alpha, float(best_margin), converged


def hidden_separability_probe(w0: Weights, data: Dataset, gamma: float,
                              layers=None, iterations: int = SOLVER_ITERATIONS,
                              restarts: int = SOLVER_RESTARTS, seed: int = 0) -> ProbeReport:
    """Best achieved margins of layer outputs against 2^{-(l+1)} gamma.

    ``layers`` defaults to 0..L; layer 0 measures the raw inputs against
    gamma itself (meaningful when the generator's margin is linear).
    A nonpositive achieved margin flags non-separability at that layer.
    """
    if gamma <= 0:
        raise InputError("gamma must be positive")
    acts, _, _ = _forward_arrays(w0, data.inputs)
    if layers is None:
        layers = range(0, w0.depth + 1)
    report = ProbeReport("hidden-separability")
    for l in layers:
        if not 0 <= l <= w0.depth:
            raise InputError(f"layer {l} out of range")
        _, margin, converged = max_min_margin(acts[l], data.labels,
                                              iterations=iterations,
                                              restarts=restarts, seed=seed)
        rhs = gamma if l == 0 else gamma * 2.0 ** (-(l + 1))
        rec = report.add({"item": "layer-margin", "layer": int(l),
                          "converged": bool(converged),
                          "separable": bool(margin > 0)},
                         max(margin, 0.0), rhs)
        rec.inputs["achieved_margin"] = float(margin)  # may be negative
    report.summary = {
        "n": data.n, "L": w0.depth, "gamma": gamma,
        "achieved": {str(r.inputs["layer"]): r.inputs["achieved_margin"]
                     for r in report.records},
    }
    return report
