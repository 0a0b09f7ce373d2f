"""The init-pattern column-stack inequality behind the gradient lower bound.

For any positive per-sample weights a_i, the quantity

    sum_j || (1/n) sum_i a_i y_i sigma'(w_{L,j}^{(0)T} x^{(0)}_{L-1,i})
                               x^{(0)}_{L-1,i} ||_2^2

is claimed to dominate 4^{-L}/8 * m_L * gamma^2 * [(1/n) sum_i a_i]^2 on
margin-gamma separable data.  The argument routes through the fact that,
at init, roughly half of the last layer's units are active on every input;
the probe therefore also reports each sample's active fraction against the
floor 1/(2 sqrt(2)) used by that step.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import InputError
from ..network import Weights, _forward_arrays
from ..training import Dataset
from .report import ProbeReport

ACTIVE_FRACTION_FLOOR = 1.0 / (2.0 * np.sqrt(2.0))


def active_fractions(w0: Weights, data: Dataset) -> np.ndarray:
    """Per-sample fraction of active last-layer units at the given weights."""
    _, pats, _ = _forward_arrays(w0, data.inputs)
    return np.mean(pats[-1], axis=1)


def gmatrix_probe(w0: Weights, data: Dataset, a_values: np.ndarray,
                  gamma: float) -> ProbeReport:
    """Column-stack norm against its claimed floor, plus active fractions.

    ``a_values`` must be strictly positive (typically the surrogate weights
    -l'(y_i f(x_i)) of some weight configuration).
    """
    a = np.asarray(a_values, dtype=np.float64)
    if a.shape != (data.n,):
        raise InputError("a_values must have one entry per sample")
    if np.any(a <= 0):
        raise InputError("a_values must be strictly positive")
    if gamma <= 0:
        raise InputError("gamma must be positive")
    m_L, L = w0.widths[-1], w0.depth
    acts, pats, _ = _forward_arrays(w0, data.inputs)
    coef = a * data.labels / data.n
    M = (acts[-2] * coef[:, None]).T @ pats[-1]  # columns are the per-unit sums
    lhs = float(np.sum(M * M))
    rhs = float(4.0 ** (-L) / 8.0 * m_L * gamma**2 * np.mean(a) ** 2)

    fractions = np.mean(pats[-1], axis=1)
    report = ProbeReport("gmatrix")
    report.add({"item": "column-stack-vs-floor", "L": L, "m_L": m_L}, lhs, rhs)
    report.add({"item": "active-fraction", "aggregate": "min"},
               float(np.min(fractions)), ACTIVE_FRACTION_FLOOR)
    report.add({"item": "active-fraction", "aggregate": "max"},
               float(np.max(fractions)), ACTIVE_FRACTION_FLOOR)
    report.summary = {
        "n": data.n, "L": L, "m_L": m_L, "gamma": gamma,
        "mean_a": float(np.mean(a)),
        "active_fraction_floor": ACTIVE_FRACTION_FLOOR,
        "active_fractions": [float(x) for x in fractions],
    }
    return report
