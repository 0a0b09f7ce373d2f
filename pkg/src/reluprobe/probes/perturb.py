"""Sampling weight configurations inside a distance ball around init.

Two direction modes: ``gaussian`` rescales an independent Gaussian draw to
exactly the requested per-layer Frobenius radius; ``gradient`` walks along
the normalized empirical-loss gradient (the adversarially relevant
direction -- random directions alone are an optimistic sample of the
neighborhood).  The ``salt`` argument switches between paired draws: for
gaussian directions it selects independent streams, for gradient
directions it flips the sign, so a (salt 0, salt 1) pair brackets the
center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InputError
from ..network import Weights
from ..rng import stream
from ..training import Dataset, loss_gradient

MODE_GAUSSIAN = "gaussian"
MODE_GRADIENT = "gradient"


@dataclass(frozen=True)
class PerturbationSpec:
    """Radius, direction mode, flagged layers (None = all), and seed."""

    radius: float
    mode: str = MODE_GAUSSIAN
    layers: tuple[int, ...] | None = None  # 1-based layer indices
    seed: int = 0

    def __post_init__(self):
        if self.radius < 0:
            raise InputError("radius must be nonnegative")
        if self.mode not in (MODE_GAUSSIAN, MODE_GRADIENT):
            raise InputError(f"unknown perturbation mode {self.mode!r}")
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(sorted(int(l) for l in self.layers)))
            if len(set(self.layers)) != len(self.layers) or any(l < 1 for l in self.layers):
                raise InputError("layers must be distinct 1-based indices")


def perturb_weights(w0: Weights, spec: PerturbationSpec, data: Dataset | None = None,
                    salt: int = 0) -> Weights:
    """A weight collection with ||W_l - W0_l||_F = radius on flagged layers.

    Gradient mode requires ``data`` (the direction is the normalized loss
    gradient at w0); layers whose gradient vanishes stay at w0.
    """
    flagged = spec.layers or tuple(range(1, w0.depth + 1))
    if any(l > w0.depth for l in flagged):
        raise InputError(f"layer index out of range for depth {w0.depth}")
    if spec.mode == MODE_GRADIENT:
        if data is None:
            raise InputError("gradient-aligned perturbations require a dataset")
        grads = loss_gradient(w0, data)
        sign = 1.0 if salt % 2 == 0 else -1.0
    layers = []
    for l, W0 in enumerate(w0.layers, start=1):
        if l not in flagged or spec.radius == 0.0:
            layers.append(W0.copy())
            continue
        if spec.mode == MODE_GAUSSIAN:
            D = stream(spec.seed, "perturb", salt, l).standard_normal(W0.shape)
            norm = np.linalg.norm(D)
        else:
            D = sign * grads[l - 1]
            norm = np.linalg.norm(D)
            if norm == 0.0:
                layers.append(W0.copy())
                continue
        layers.append(W0 + (spec.radius / norm) * D)
    return Weights(tuple(layers), w0.v, w0.config)
