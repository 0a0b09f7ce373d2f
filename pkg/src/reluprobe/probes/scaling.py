"""Scaling and perturbation measurements around initialization.

For sampled weight pairs inside a common distance ball the probe measures
six families of quantities, each against the functional form of its
claimed bound with the constant set to 1:

  i    per-layer spectral norms and hidden-output norms (claimed O(1));
  ii   operator norms of the masked tail products, applied implicitly
       (claimed O(L));
  iii  hidden-output differences against sqrt(L) * sum of per-layer
       spectral difference norms;
  iv   activation-pattern flip counts against L^{4/3} tau^{2/3} m;
  v    the tail-product row vector restricted to the observed flip
       support, against L^{2/3} tau^{1/3} sqrt(m log m) -- the restriction
       direction is chosen adversarially (the normalized restriction of
       the row vector itself), which attains the maximum over unit vectors
       on that support;
  vi   the full tail-product row vector norm against sqrt(m).

Differences (iii)-(v) are exactly zero when the pair coincides (radius 0).
"""

from __future__ import annotations

import numpy as np

from ..linalg import POWER_ITER_MAX, POWER_ITER_TOL, operator_norm, spectral_norm
from ..network import Weights, _backprop_rows, _forward_arrays
from ..training import Dataset
from .perturb import PerturbationSpec, perturb_weights
from .report import ProbeReport


def _tail_row_vectors(w: Weights, pats: list[np.ndarray]) -> list[np.ndarray]:
    """g_l(x_i): the tail product applied to the output vector.

    ``g_l`` is the transpose of ``v^T [prod_{r=l}^L Sigma_r W_r^T]``, an
    element of R^{m_{l-1}} per input; computed right-to-left as masked
    matrix-vector chains (index l is 1-based; returned list is 0-based).
    """
    rows = _backprop_rows(w, pats)
    return [rows[l] @ w.layers[l].T for l in range(w.depth)]


def _tail_operator_norm(w: Weights, pats_i: list[np.ndarray], l: int,
                        tol: float, max_iter: int) -> float:
    """||prod_{r=l}^L Sigma_r(x_i) W_r^T||_2 for one input, implicitly."""

    def matvec(z):
        for r in range(l, w.depth + 1):
            z = pats_i[r - 1] * (z @ w.layers[r - 1])
        return z

    def rmatvec(y):
        for r in range(w.depth, l - 1, -1):
            y = w.layers[r - 1] @ (pats_i[r - 1] * y)
        return y

    dim = w.layers[l - 1].shape[0]
    return operator_norm(matvec, rmatvec, dim, tol=tol, max_iter=max_iter)


def scaling_probe(w0: Weights, perturbations: list[PerturbationSpec], data: Dataset,
                  operator_norm_samples: int = 8, power_tol: float = POWER_ITER_TOL,
                  power_max_iter: int = POWER_ITER_MAX) -> ProbeReport:
    """Measure items (i)-(vi) for each perturbation spec.

    Each spec yields a pair (salt 0, salt 1) of weight sets inside its
    ball.  Records carry the item tag, the ball radius, the layer, and the
    aggregation over samples (max, and additionally mean for the flip
    counts whose sweep slope is conventionally fitted on means).
    """
    report = ProbeReport("scaling")
    m = min(w0.widths)
    L = w0.depth
    n_op = min(operator_norm_samples, data.n)
    X = data.inputs

    for spec in perturbations:
        tau = spec.radius
        wt = perturb_weights(w0, spec, data, salt=0)
        wh = perturb_weights(w0, spec, data, salt=1)
        acts_t, pats_t, _ = _forward_arrays(wt, X)
        acts_h, pats_h, _ = _forward_arrays(wh, X)
        base = {"tau": tau, "mode": spec.mode, "sweep_variable": "tau"}

        # (i) spectral norms of the layers and hidden-output norms
        for l in range(1, L + 1):
            report.add({**base, "item": "i-spectral", "layer": l},
                       spectral_norm(wt.layers[l - 1], tol=power_tol,
                                     max_iter=power_max_iter), 1.0)
            report.add({**base, "item": "i-hidden-norm", "layer": l, "aggregate": "max"},
                       float(np.max(np.linalg.norm(acts_t[l], axis=1))), 1.0)

        # (ii) masked tail-product operator norms on a deterministic subsample
        for l in range(1, L + 1) if n_op > 0 else ():
            vals = []
            for i in range(n_op):
                pats_i = [p[i] for p in pats_t]
                vals.append(_tail_operator_norm(wt, pats_i, l, power_tol, power_max_iter))
            report.add({**base, "item": "ii-tail-operator", "layer": l,
                        "aggregate": "max", "samples": n_op},
                       float(np.max(vals)), float(L))

        # (iii) hidden-output differences vs cumulative spectral difference norms
        diff_spectral = [spectral_norm(a - b, tol=power_tol, max_iter=power_max_iter)
                         if tau > 0 else 0.0
                         for a, b in zip(wh.layers, wt.layers)]
        for l in range(1, L + 1):
            lhs = float(np.max(np.linalg.norm(acts_h[l] - acts_t[l], axis=1)))
            rhs = float(np.sqrt(L) * np.sum(diff_spectral[:l]))
            report.add({**base, "item": "iii-hidden-diff", "layer": l, "aggregate": "max"},
                       lhs, rhs)

        # (iv) pattern flip counts vs L^{4/3} tau^{2/3} m
        rhs_flip = float(L ** (4.0 / 3.0) * tau ** (2.0 / 3.0) * m)
        for l in range(1, L + 1):
            flips = np.sum(pats_t[l - 1] != pats_h[l - 1], axis=1)
            report.add({**base, "item": "iv-flips", "layer": l, "aggregate": "max"},
                       float(np.max(flips)), rhs_flip)
            report.add({**base, "item": "iv-flips", "layer": l, "aggregate": "mean"},
                       float(np.mean(flips)), rhs_flip)

        # (v) tail row vector on the observed flip support (adversarial a)
        # and (vi) its full norm
        g = _tail_row_vectors(wt, pats_t)
        rhs_sparse = float(L ** (2.0 / 3.0) * tau ** (1.0 / 3.0) * np.sqrt(m * np.log(m)))
        for l in range(1, L + 1):
            g_l = g[l - 1]  # (n, m_{l-1})
            report.add({**base, "item": "vi-tail-row", "layer": l, "aggregate": "max"},
                       float(np.max(np.linalg.norm(g_l, axis=1))), float(np.sqrt(m)))
            if l >= 2:
                support = pats_t[l - 2] != pats_h[l - 2]  # flips at layer l-1
                restricted = np.where(support, g_l, 0.0)
                lhs = float(np.max(np.linalg.norm(restricted, axis=1)))
                report.add({**base, "item": "v-flip-support", "layer": l,
                            "aggregate": "max",
                            "max_support": int(np.max(np.sum(support, axis=1)))},
                           lhs, rhs_sparse)

    taus = sorted({s.radius for s in perturbations})
    report.summary = {
        "n": data.n, "m": m, "L": L,
        "taus": [float(t) for t in taus],
        "max_ratio_by_item": {
            item: max(r.ratio for r in report.select(item=item))
            for item in sorted({r.inputs["item"] for r in report.records})
        },
    }
    positive_taus = [t for t in taus if t > 0]
    if len(positive_taus) >= 3:
        mean_flips = []
        for t in positive_taus:
            recs = [r for r in report.records
                    if r.inputs["item"] == "iv-flips" and r.inputs.get("aggregate") == "mean"
                    and r.inputs["tau"] == t]
            mean_flips.append(np.mean([r.lhs for r in recs]))
        if all(v > 0 for v in mean_flips):
            from ..linalg import loglog_slope
            report.summary["mean_flip_slope_vs_tau"] = loglog_slope(positive_taus, mean_flips)
    return report


def make_tau_sweep(taus, mode: str = "gaussian", seed: int = 0,
                   layers=None) -> list[PerturbationSpec]:
    """One spec per radius, sharing mode/seed; convenience for sweeps."""
    return [PerturbationSpec(radius=float(t), mode=mode, layers=layers, seed=seed)
            for t in taus]
