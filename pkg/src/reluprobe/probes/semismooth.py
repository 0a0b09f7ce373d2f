"""Almost-linearity of the network output in its weights near init.

For weight sets w_tilde, w_hat in a common distance ball around w0, the
first-order expansion of the output at w_tilde is

    F(x) = f_{w_tilde}(x) + sum_l Tr[(W_hat_l - W_tilde_l)^T grad_l f_{w_tilde}(x)]

and the probe measures the per-sample residual |f_{w_hat}(x) - F(x)|
against the claimed form L^2 tau^{1/3} sqrt(m log m) * sum_l ||dW_l||_2,
plus the loss-level residual against its two-term form (a surrogate-error
weighted linear term and an m L^3 ||dW||_2^2 quadratic term).

Two exactness facts anchor the measurements: the residual is identically
zero when the two weight sets coincide, and -- because the network is
exactly linear in any single layer once activation patterns are frozen --
it vanishes (to roundoff) for single-layer perturbations that flip no
pattern bit on the probed inputs.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import InputError, NumericError
from ..linalg import loglog_slope, spectral_norm
from ..network import Weights, _backprop_rows, _forward_arrays, weight_distances
from ..rng import stream
from ..training import Dataset, loss, loss_derivative, loss_gradient
from .perturb import PerturbationSpec, perturb_weights
from .report import ProbeReport


def _linearization_terms(w_tilde: Weights, deltas, X: np.ndarray):
    """f_{w_tilde}(x_i) and sum_l Tr[delta_l^T grad_l f_{w_tilde}(x_i)].

    Per-sample gradients are rank one, so each trace term reduces to
    (x_{l-1}^T delta_l) . u_l without forming any gradient matrix.
    """
    acts, pats, f = _forward_arrays(w_tilde, X)
    rows = _backprop_rows(w_tilde, pats)
    lin = np.zeros(X.shape[0])
    for l in range(w_tilde.depth):
        lin += np.einsum("ij,ij->i", acts[l] @ deltas[l], rows[l])
    return f, lin


def semismoothness_probe(w0: Weights, w_tilde: Weights, w_hat: Weights,
                         data: Dataset) -> ProbeReport:
    """Residuals of the first-order expansion between two weight sets.

    ``tau`` is taken as the max per-layer distance of either set from w0
    (the common ball radius actually realized, not assumed).
    """
    if w_tilde.widths != w_hat.widths or w_tilde.widths != w0.widths:
        raise InputError("weight collections have different architectures")
    m, L = min(w0.widths), w0.depth
    tau = float(max(np.max(weight_distances(w_tilde, w0)),
                    np.max(weight_distances(w_hat, w0))))
    deltas = [Wh - Wt for Wh, Wt in zip(w_hat.layers, w_tilde.layers)]
    delta_spectral = [spectral_norm(D) if np.any(D) else 0.0 for D in deltas]
    sum_spectral = float(np.sum(delta_spectral))

    f_tilde, lin = _linearization_terms(w_tilde, deltas, data.inputs)
    _, _, f_hat = _forward_arrays(w_hat, data.inputs)
    residuals = np.abs(f_hat - (f_tilde + lin))
    rhs_output = float(L**2 * tau ** (1.0 / 3.0) * np.sqrt(m * np.log(m)) * sum_spectral)

    report = ProbeReport("semismoothness")
    base = {"tau": tau, "sweep_variable": "tau"}
    report.add({**base, "item": "output-residual", "aggregate": "max"},
               float(np.max(residuals)), rhs_output)
    report.add({**base, "item": "output-residual", "aggregate": "mean"},
               float(np.mean(residuals)), rhs_output)

    # loss-level residual against the two-term form
    z_t = data.labels * f_tilde
    z_h = data.labels * f_hat
    es_tilde = float(np.mean(-loss_derivative(z_t)))
    grads = loss_gradient(w_tilde, data)
    lin_loss = float(sum(np.einsum("ij,ij", D, G) for D, G in zip(deltas, grads)))
    lhs_loss = float(np.mean(loss(z_h)) - np.mean(loss(z_t)) - lin_loss)
    rhs_linear = rhs_output * es_tilde
    rhs_quadratic = float(m * L**3 * np.sum(np.square(delta_spectral)))
    report.add({**base, "item": "loss-residual"},
               lhs_loss, rhs_linear + rhs_quadratic)
    report.summary = {
        "n": data.n, "m": m, "L": L, "tau": tau,
        "sum_delta_spectral": sum_spectral,
        "surrogate_at_tilde": es_tilde,
        "loss_rhs_terms": {"linear": rhs_linear, "quadratic": rhs_quadratic},
    }
    return report


def semismoothness_sweep(w0: Weights, data: Dataset, taus, mode: str = "gaussian",
                         seed: int = 0) -> ProbeReport:
    """Max output residual across a radius sweep, with its log-log slope.

    Each radius draws a (salt 0, salt 1) pair in its ball; the summary
    carries the slope of max residual against tau when at least three
    positive radii are present.
    """
    report = ProbeReport("semismoothness-sweep")
    max_residuals = []
    for tau in taus:
        spec = PerturbationSpec(radius=float(tau), mode=mode, seed=seed)
        wt = perturb_weights(w0, spec, data, salt=0)
        wh = perturb_weights(w0, spec, data, salt=1)
        sub = semismoothness_probe(w0, wt, wh, data)
        rec = sub.select(item="output-residual", aggregate="max")[0]
        report.add({"tau": float(tau), "item": "output-residual",
                    "aggregate": "max", "mode": mode, "sweep_variable": "tau"},
                   rec.lhs, rec.rhs)
        max_residuals.append(rec.lhs)
    report.summary = {"taus": [float(t) for t in taus], "mode": mode,
                      "max_residuals": [float(v) for v in max_residuals]}
    positive = [(t, v) for t, v in zip(taus, max_residuals) if t > 0 and v > 0]
    if len(positive) >= 3:
        report.summary["residual_slope_vs_tau"] = loglog_slope(
            [t for t, _ in positive], [v for _, v in positive])
    return report


def pattern_preserving_single_layer(w0: Weights, data: Dataset, layer: int,
                                    seed: int = 0, initial_scale: float = 1e-3,
                                    max_halvings: int = 200) -> Weights:
    """A single-layer perturbation that flips no activation pattern bit.

    Draws a random direction for the given layer and halves its magnitude
    until the activation patterns of every sample are unchanged; on such a
    perturbation the network output is exactly linear in the perturbed
    layer.  Fails with NumericError if some pre-activation sits exactly on
    the kink so no scale works (measure-zero for generic weights).
    """
    if not 1 <= layer <= w0.depth:
        raise InputError(f"layer must be in 1..{w0.depth}")
    _, pats0, _ = _forward_arrays(w0, data.inputs)
    D = stream(seed, "pattern-preserving", layer).standard_normal(
        w0.layers[layer - 1].shape)
    D /= np.linalg.norm(D)
    scale = initial_scale
    for _ in range(max_halvings):
        layers = list(W.copy() for W in w0.layers)
        layers[layer - 1] = layers[layer - 1] + scale * D
        w = Weights(tuple(layers), w0.v, w0.config)
        _, pats, _ = _forward_arrays(w, data.inputs)
        if all(np.array_equal(a, b) for a, b in zip(pats, pats0)):
            return w
        scale /= 2.0
    raise NumericError(
        f"could not find a pattern-preserving perturbation of layer {layer} "
        f"after {max_halvings} halvings")
